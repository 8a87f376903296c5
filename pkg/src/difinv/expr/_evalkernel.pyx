# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled stack-machine evaluator for postfix expression programs."""

from libc.math cimport exp, log, sin, cos, tan, asin, atan, sqrt, pow, floor, isfinite, fabs
from libc.stdlib cimport malloc, free

cdef enum:
    CONST = 0
    SYM = 1
    ADD = 2
    MUL = 3
    NEG = 4
    POWI = 5
    POW = 6
    EXP = 7
    LN = 8
    SIN = 9
    COS = 10
    TAN = 11
    ASIN = 12
    ATAN = 13
    SQRT = 14
    STORE = 15
    LOAD = 16

cdef enum:
    OK = 0
    E_LN = 1
    E_SQRT = 2
    E_ARCSIN = 3
    E_DIVISION = 4
    E_POW = 5
    E_COMPLEX = 6
    E_NONFINITE = 7


cdef inline double _powi(double b, long n) nogil:
    cdef double r = 1.0
    cdef bint inv = n < 0
    if inv:
        n = -n
    while n:
        if n & 1:
            r *= b
        b *= b
        n >>= 1
    return 1.0 / r if inv else r


def eval_program(const int[::1] ops, const long[::1] args, const double[::1] consts,
                 const double[:, ::1] points, double[::1] out, int[::1] status, int depth,
                 int nregs=0):
    """Evaluate one program at every row of ``points``.

    Writes the value to ``out[p]`` and an error code to ``status[p]``
    (0 when the point is inside every function's real domain).
    """
    cdef Py_ssize_t npts = points.shape[0]
    cdef Py_ssize_t nops = ops.shape[0]
    cdef Py_ssize_t p, k, j
    cdef int sp, err, op
    cdef long a
    cdef double acc, b, e
    cdef double *stack = <double *> malloc((depth + 1 + nregs) * sizeof(double))
    cdef double *regs
    if stack == NULL:
        raise MemoryError()
    regs = stack + depth + 1
    try:
        with nogil:
            for p in range(npts):
                sp = 0
                err = OK
                for k in range(nops):
                    op = ops[k]
                    a = args[k]
                    if op == CONST:
                        stack[sp] = consts[a]
                        sp += 1
                    elif op == SYM:
                        stack[sp] = points[p, a]
                        sp += 1
                    elif op == LOAD:
                        stack[sp] = regs[a]
                        sp += 1
                    elif op == STORE:
                        regs[a] = stack[sp - 1]
                    elif op == ADD:
                        acc = 0.0
                        for j in range(sp - a, sp):
                            acc += stack[j]
                        sp -= a
                        stack[sp] = acc
                        sp += 1
                    elif op == MUL:
                        acc = 1.0
                        for j in range(sp - a, sp):
                            acc *= stack[j]
                        sp -= a
                        stack[sp] = acc
                        sp += 1
                    elif op == NEG:
                        stack[sp - 1] = -stack[sp - 1]
                    elif op == POWI:
                        b = stack[sp - 1]
                        if b == 0.0 and a < 0:
                            err = E_DIVISION if a == -1 else E_POW
                            break
                        stack[sp - 1] = _powi(b, a)
                    elif op == POW:
                        e = stack[sp - 1]
                        b = stack[sp - 2]
                        sp -= 1
                        if b == 0.0 and e < 0.0:
                            err = E_POW
                            break
                        if b < 0.0 and e != floor(e):
                            err = E_COMPLEX
                            break
                        stack[sp - 1] = pow(b, e)
                    elif op == EXP:
                        stack[sp - 1] = exp(stack[sp - 1])
                    elif op == LN:
                        b = stack[sp - 1]
                        if b <= 0.0:
                            err = E_LN
                            break
                        stack[sp - 1] = log(b)
                    elif op == SIN:
                        stack[sp - 1] = sin(stack[sp - 1])
                    elif op == COS:
                        stack[sp - 1] = cos(stack[sp - 1])
                    elif op == TAN:
                        stack[sp - 1] = tan(stack[sp - 1])
                    elif op == ASIN:
                        b = stack[sp - 1]
                        if fabs(b) > 1.0:
                            err = E_ARCSIN
                            break
                        stack[sp - 1] = asin(b)
                    elif op == ATAN:
                        stack[sp - 1] = atan(stack[sp - 1])
                    elif op == SQRT:
                        b = stack[sp - 1]
                        if b < 0.0:
                            err = E_SQRT
                            break
                        stack[sp - 1] = sqrt(b)
                if err == OK:
                    out[p] = stack[0]
                    if not isfinite(stack[0]):
                        err = E_NONFINITE
                else:
                    out[p] = 0.0
                status[p] = err
    finally:
        free(stack)
