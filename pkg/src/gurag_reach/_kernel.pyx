# distutils: language = c++
# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled breadth-first search kernel over bit-packed states.

Drop-in replacement for the pure-Python kernel: same ``bfs`` signature, same
outcome codes, byte-identical results.  States are fixed-width bit vectors of
up to MAX_BITS bits stored as four 64-bit words; the visited set is an
open-addressing hash table over indices into a flat state arena.  Instances
wider than MAX_BITS must use the pure kernel (the selector enforces this).
"""

import time

from libc.stdint cimport int32_t, uint8_t, uint32_t, uint64_t
from libc.stdlib cimport calloc, free
from libcpp.vector cimport vector

KERNEL_NAME = "compiled"

DEF W = 4
MAX_BITS = 64 * W

# Outcome codes shared with the pure kernel
REACHABLE = 0
UNREACHABLE = 1
DEPTH_EXCEEDED = 2
STATES_EXCEEDED = 3
MILLIS_EXCEEDED = 4

DEF TIME_CHECK_INTERVAL = 2048

# opcodes, kept numerically in sync with the encoding module
DEF OP_TRUE = 0
DEF OP_NOT = 1
DEF OP_AND = 2
DEF OP_DIRECT_VAL = 3
DEF OP_EFF_VAL = 4
DEF OP_DIRECT_GROUP = 5
DEF OP_EFF_GROUP = 6


cdef inline void words_from_int(object value, uint64_t *out):
    cdef int w
    for w in range(W):
        out[w] = <uint64_t> ((value >> (64 * w)) & 0xFFFFFFFFFFFFFFFF)


cdef object int_from_words(uint64_t *words):
    cdef object acc = 0
    cdef int w
    for w in range(W - 1, -1, -1):
        acc = (acc << 64) | words[w]
    return acc


cdef inline bint get_bit(uint64_t *words, int bit) nogil:
    return (words[bit >> 6] >> (bit & 63)) & 1


cdef inline void shift_right_into(uint64_t *src, int k, uint64_t *dst) nogil:
    """dst = src >> k, across W words."""
    cdef int word = k >> 6
    cdef int off = k & 63
    cdef int w
    for w in range(W):
        dst[w] = 0
    for w in range(W - word):
        dst[w] = src[w + word] >> off
        if off and w + word + 1 < W:
            dst[w] |= src[w + word + 1] << (64 - off)


cdef inline uint64_t mix64(uint64_t x) nogil:
    x ^= x >> 33
    x *= <uint64_t> 0xFF51AFD7ED558CCD
    x ^= x >> 33
    x *= <uint64_t> 0xC4CEB9FE1A85EC53
    x ^= x >> 33
    return x


cdef inline uint64_t hash_state(uint64_t *words) nogil:
    cdef uint64_t h = <uint64_t> 0x9E3779B97F4A7C15
    cdef int w
    for w in range(W):
        h = mix64(h ^ (words[w] + <uint64_t> 0x632BE59BD9B4E019 * (w + 1)))
    return h


cdef inline bint words_equal(uint64_t *a, uint64_t *b) nogil:
    cdef int w
    for w in range(W):
        if a[w] != b[w]:
            return False
    return True


cdef struct Table:
    uint32_t *slots   # stored index + 1; 0 means empty
    uint64_t mask
    uint64_t count
    uint64_t capacity


cdef class _Search:
    """All per-run arrays; lives only for the duration of one bfs call."""

    cdef int n_slots, n_groups, mem_offset, n_cands
    cdef uint64_t smask[W]                 # (1 << n_slots) - 1 across words
    cdef vector[int32_t] seg_offsets
    cdef vector[int32_t] closure_flat      # concatenated junior closures
    cdef vector[int32_t] closure_start     # n_groups + 1 offsets
    cdef vector[int32_t] senior_flat       # concatenated senior-or-equal lists
    cdef vector[int32_t] senior_start

    cdef vector[int32_t] cand_bit
    cdef vector[uint8_t] cand_add
    cdef vector[int32_t] cand_subject
    cdef vector[int32_t] prog_op
    cdef vector[int32_t] prog_arg
    cdef vector[int32_t] prog_start        # n_cands + 1 offsets

    cdef int n_goal
    cdef vector[uint64_t] goal_mask        # W words per entry
    cdef vector[uint64_t] goal_target
    cdef bint strict

    cdef vector[uint64_t] arena            # W words per discovered state
    cdef vector[int32_t] parents
    cdef vector[int32_t] via
    cdef vector[int32_t] depths
    cdef Table table
    cdef vector[uint8_t] prog_stack        # scratch for guard evaluation

    def __cinit__(self):
        self.table.slots = NULL

    def __dealloc__(self):
        if self.table.slots != NULL:
            free(self.table.slots)


cdef int table_init(Table *t, uint64_t capacity) except -1:
    t.slots = <uint32_t *> calloc(capacity, sizeof(uint32_t))
    if t.slots == NULL:
        raise MemoryError()
    t.mask = capacity - 1
    t.count = 0
    t.capacity = capacity
    return 0


cdef int table_grow(_Search s) except -1:
    cdef Table old = s.table
    cdef uint64_t new_cap = old.capacity * 2
    cdef Table fresh
    table_init(&fresh, new_cap)
    cdef uint64_t i, pos
    cdef uint32_t stored
    cdef uint64_t *arena = s.arena.data()
    for i in range(old.capacity):
        stored = old.slots[i]
        if stored == 0:
            continue
        pos = hash_state(&arena[(stored - 1) * W]) & fresh.mask
        while fresh.slots[pos] != 0:
            pos = (pos + 1) & fresh.mask
        fresh.slots[pos] = stored
    fresh.count = old.count
    free(old.slots)
    s.table = fresh
    return 0


cdef int table_insert(_Search s, uint64_t *words, uint32_t index) except -1:
    """Insert; returns 0 if an equal state was already present, 1 otherwise.

    Growth happens before the new index is stored: the caller pushes the
    state into the arena only after a successful insert, so rehashing must
    never see the new index.
    """
    cdef Table *t = &s.table
    cdef uint64_t pos = hash_state(words) & t.mask
    cdef uint32_t stored
    cdef uint64_t *arena = s.arena.data()
    while True:
        stored = t.slots[pos]
        if stored == 0:
            break
        if words_equal(&arena[(stored - 1) * W], words):
            return 0
        pos = (pos + 1) & t.mask
    if (t.count + 1) * 10 >= t.capacity * 7:
        table_grow(s)
        t = &s.table
        pos = hash_state(words) & t.mask
        while t.slots[pos] != 0:
            pos = (pos + 1) & t.mask
    t.slots[pos] = index + 1
    t.count += 1
    return 1


cdef void eff_group_bits(_Search s, uint64_t *state, int j, uint64_t *out) nogil:
    cdef uint64_t seg[W]
    cdef int w, k, i
    for w in range(W):
        out[w] = 0
    for i in range(s.closure_start[j], s.closure_start[j + 1]):
        k = s.closure_flat[i]
        shift_right_into(state, s.seg_offsets[k], seg)
        for w in range(W):
            out[w] |= seg[w] & s.smask[w]


cdef void eff_user_bits(_Search s, uint64_t *state, uint64_t *out) nogil:
    cdef uint64_t tmp[W]
    cdef int w, j
    for w in range(W):
        out[w] = state[w] & s.smask[w]
    for j in range(s.n_groups):
        if get_bit(state, s.mem_offset + j):
            eff_group_bits(s, state, j, tmp)
            for w in range(W):
                out[w] |= tmp[w]


cdef bint run_program(_Search s, int cand, uint64_t *state,
                      uint64_t *eff_user, bint *eff_user_ready) nogil:
    cdef int subject = s.cand_subject[cand]
    cdef uint64_t direct[W]
    cdef uint64_t eff[W]
    cdef bint eff_ready = False
    cdef int w, p, op, arg, sp = 0, i
    cdef bint a, b, hit
    cdef uint8_t *stack = s.prog_stack.data()

    if subject < 0:
        for w in range(W):
            direct[w] = state[w] & s.smask[w]
    else:
        shift_right_into(state, s.seg_offsets[subject], direct)
        for w in range(W):
            direct[w] &= s.smask[w]

    for p in range(s.prog_start[cand], s.prog_start[cand + 1]):
        op = s.prog_op[p]
        arg = s.prog_arg[p]
        if op == OP_DIRECT_VAL:
            stack[sp] = get_bit(direct, arg)
            sp += 1
        elif op == OP_EFF_VAL:
            if not eff_ready:
                if subject < 0:
                    if not eff_user_ready[0]:
                        eff_user_bits(s, state, eff_user)
                        eff_user_ready[0] = True
                    for w in range(W):
                        eff[w] = eff_user[w]
                else:
                    eff_group_bits(s, state, subject, eff)
                eff_ready = True
            stack[sp] = get_bit(eff, arg)
            sp += 1
        elif op == OP_AND:
            b = stack[sp - 1]
            a = stack[sp - 2]
            sp -= 2
            stack[sp] = a and b
            sp += 1
        elif op == OP_NOT:
            stack[sp - 1] = not stack[sp - 1]
        elif op == OP_TRUE:
            stack[sp] = True
            sp += 1
        elif op == OP_DIRECT_GROUP:
            stack[sp] = get_bit(state, s.mem_offset + arg)
            sp += 1
        else:  # OP_EFF_GROUP: directly in any group senior-or-equal to arg
            hit = False
            for i in range(s.senior_start[arg], s.senior_start[arg + 1]):
                if get_bit(state, s.mem_offset + s.senior_flat[i]):
                    hit = True
                    break
            stack[sp] = hit
            sp += 1
    return stack[sp - 1]


cdef bint goal_holds(_Search s, uint64_t *state,
                     uint64_t *eff_user, bint *eff_user_ready) nogil:
    cdef int e, w
    cdef uint64_t got, want
    if not eff_user_ready[0]:
        eff_user_bits(s, state, eff_user)
        eff_user_ready[0] = True
    for e in range(s.n_goal):
        for w in range(W):
            got = eff_user[w] & s.goal_mask[e * W + w]
            want = s.goal_target[e * W + w]
            if s.strict:
                if got != want:
                    return False
            else:
                if want & ~eff_user[w]:
                    return False
    return True


cdef _Search build(object ci, object goal, bint strict):
    cdef _Search s = _Search()
    cdef int w
    s.n_slots = ci.n_slots
    s.n_groups = ci.n_groups
    s.mem_offset = ci.mem_offset
    words_from_int((1 << ci.n_slots) - 1, s.smask)

    for off in ci.seg_offsets:
        s.seg_offsets.push_back(off)

    s.closure_start.push_back(0)
    for closure in ci.closure_idx:
        for k in closure:
            s.closure_flat.push_back(k)
        s.closure_start.push_back(<int32_t> s.closure_flat.size())

    # senior-or-equal lists, inverted from the junior closures
    seniors = [[] for _ in range(s.n_groups)]
    for k_idx, closure in enumerate(ci.closure_idx):
        for j in closure:
            seniors[j].append(k_idx)
    s.senior_start.push_back(0)
    for lst in seniors:
        for k in lst:
            s.senior_flat.push_back(k)
        s.senior_start.push_back(<int32_t> s.senior_flat.size())

    cdef int max_prog = 1
    # a typed temporary: letting Cython coerce a Python int straight into
    # vector[uint8_t] goes through its object->char path and stores garbage
    cdef uint8_t add_flag
    s.prog_start.push_back(0)
    for cand in ci.candidates:
        s.cand_bit.push_back(cand.bit)
        add_flag = 1 if cand.add else 0
        s.cand_add.push_back(add_flag)
        s.cand_subject.push_back(cand.subject)
        for op, arg in cand.program:
            s.prog_op.push_back(op)
            s.prog_arg.push_back(arg)
        s.prog_start.push_back(<int32_t> s.prog_op.size())
        if len(cand.program) + 1 > max_prog:
            max_prog = len(cand.program) + 1
    s.n_cands = len(ci.candidates)
    s.prog_stack.resize(max_prog)

    cdef uint64_t buf[W]
    if goal is not None:
        s.n_goal = len(goal)
        for entry in goal:
            words_from_int(entry.mask, buf)
            for w in range(W):
                s.goal_mask.push_back(buf[w])
            words_from_int(entry.target, buf)
            for w in range(W):
                s.goal_target.push_back(buf[w])
    else:
        s.n_goal = 0
    s.strict = strict
    return s


def _debug_build(object ci):
    cdef _Search s = build(ci, None, False)
    return {
        "n_slots": s.n_slots, "n_groups": s.n_groups, "mem_offset": s.mem_offset,
        "n_cands": s.n_cands,
        "smask": [s.smask[w] for w in range(W)],
        "cand_bit": [s.cand_bit[i] for i in range(s.cand_bit.size())],
        "cand_add": [s.cand_add[i] for i in range(s.cand_add.size())],
        "cand_subject": [s.cand_subject[i] for i in range(s.cand_subject.size())],
        "prog_op": [s.prog_op[i] for i in range(s.prog_op.size())],
        "prog_start": [s.prog_start[i] for i in range(s.prog_start.size())],
    }


def bfs(object ci, object start, object goal, bint strict,
        int max_depth, long long max_states, long long max_millis):
    """Identical contract to the pure kernel's ``bfs``."""
    if ci.nbits > MAX_BITS:
        raise ValueError(f"instance needs {ci.nbits} bits; this kernel supports {MAX_BITS}")

    cdef _Search s = build(ci, goal, strict)
    cdef bint has_goal = goal is not None

    cdef uint64_t first[W]
    cdef uint64_t eff_user[W]
    cdef uint64_t succ[W]
    cdef bint eff_ready = False
    words_from_int(start, first)

    if has_goal and goal_holds(s, first, eff_user, &eff_ready):
        return REACHABLE, [], 1

    cdef int w
    for w in range(W):
        s.arena.push_back(first[w])
    s.parents.push_back(-1)
    s.via.push_back(-1)
    s.depths.push_back(0)
    table_init(&s.table, 1 << 12)
    table_insert(s, first, 0)

    cdef double deadline = time.monotonic() + max_millis / 1000.0
    cdef bint depth_cut = False
    cdef long long expanded = 0
    cdef long long head = 0
    cdef long long n_states = 1
    cdef int c, depth
    cdef uint64_t *state
    cdef uint64_t bit_mask
    cdef int bit_word
    cdef long long at

    while head < n_states:
        depth = s.depths[head]
        if depth >= max_depth:
            depth_cut = True
            head += 1
            continue
        expanded += 1
        if expanded % TIME_CHECK_INTERVAL == 0 and time.monotonic() > deadline:
            return MILLIS_EXCEEDED, None, n_states
        eff_ready = False
        for c in range(s.n_cands):
            state = &s.arena.data()[head * W]  # arena may move on growth
            bit_word = s.cand_bit[c] >> 6
            bit_mask = (<uint64_t> 1) << (s.cand_bit[c] & 63)
            for w in range(W):
                succ[w] = state[w]
            if s.cand_add[c]:
                succ[bit_word] |= bit_mask
            else:
                succ[bit_word] &= ~bit_mask
            if words_equal(succ, state):
                continue
            if not run_program(s, c, state, eff_user, &eff_ready):
                continue
            # membership test only now: the guard is cheap and usually fails
            if not table_insert(s, succ, <uint32_t> n_states):
                continue
            if n_states >= max_states:
                return STATES_EXCEEDED, None, n_states
            for w in range(W):
                s.arena.push_back(succ[w])
            s.parents.push_back(<int32_t> head)
            s.via.push_back(c)
            s.depths.push_back(depth + 1)
            n_states += 1
            if has_goal:
                if _succ_goal(s, succ):
                    plan = []
                    at = n_states - 1
                    while at > 0:
                        plan.append(s.via[at])
                        at = s.parents[at]
                    plan.reverse()
                    return REACHABLE, plan, n_states
        head += 1

    if not has_goal:
        out = []
        for at in range(n_states):
            out.append((int_from_words(&s.arena.data()[at * W]), s.depths[at]))
        return (DEPTH_EXCEEDED if depth_cut else UNREACHABLE), out, n_states
    if depth_cut:
        return DEPTH_EXCEEDED, None, n_states
    return UNREACHABLE, None, n_states


cdef bint _succ_goal(_Search s, uint64_t *succ) nogil:
    cdef uint64_t eff[W]
    cdef bint ready = False
    return goal_holds(s, succ, eff, &ready)
