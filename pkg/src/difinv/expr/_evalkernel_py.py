"""Pure-Python twin of the compiled evaluator (same signature, same codes)."""

import math

from ._opcodes import (
    ADD, ASIN, ATAN, CONST, COS, EXP, LN, LOAD, MUL, NEG, POW, POWI, SIN, SQRT, STORE, SYM, TAN,
    E_ARCSIN, E_COMPLEX, E_DIVISION, E_LN, E_NONFINITE, E_POW, E_SQRT, OK,
)


def _powi(b, n):
    # the same square-and-multiply sequence as the compiled kernel, so both
    # backends round identically
    r = 1.0
    inv = n < 0
    if inv:
        n = -n
    while n:
        if n & 1:
            r *= b
        b *= b
        n >>= 1
    return 1.0 / r if inv else r


def _exp(v):
    try:
        return math.exp(v)
    except OverflowError:
        return math.inf


def eval_program(ops, args, consts, points, out, status, depth, nregs=0):
    ops = [int(o) for o in ops]
    args = [int(a) for a in args]
    consts = [float(c) for c in consts]
    program = list(zip(ops, args))
    for p, row in enumerate(points.tolist()):
        stack = []
        regs = [0.0] * nregs
        push = stack.append
        err = OK
        for op, a in program:
            if op == CONST:
                push(consts[a])
            elif op == SYM:
                push(row[a])
            elif op == LOAD:
                push(regs[a])
            elif op == STORE:
                regs[a] = stack[-1]
            elif op == ADD:
                acc = 0.0
                for v in stack[-a:]:
                    acc += v
                del stack[-a:]
                push(acc)
            elif op == MUL:
                acc = 1.0
                for v in stack[-a:]:
                    acc *= v
                del stack[-a:]
                push(acc)
            elif op == NEG:
                stack[-1] = -stack[-1]
            elif op == POWI:
                b = stack[-1]
                if b == 0.0 and a < 0:
                    err = E_DIVISION if a == -1 else E_POW
                    break
                stack[-1] = _powi(b, a)
            elif op == POW:
                e = stack.pop()
                b = stack[-1]
                if b == 0.0 and e < 0.0:
                    err = E_POW
                    break
                if b < 0.0 and e != math.floor(e):
                    err = E_COMPLEX
                    break
                try:
                    stack[-1] = math.pow(b, e)
                except OverflowError:
                    stack[-1] = math.inf
            elif op == EXP:
                stack[-1] = _exp(stack[-1])
            elif op == LN:
                b = stack[-1]
                if b <= 0.0:
                    err = E_LN
                    break
                stack[-1] = math.log(b)
            elif op == SIN:
                stack[-1] = math.sin(stack[-1])
            elif op == COS:
                stack[-1] = math.cos(stack[-1])
            elif op == TAN:
                stack[-1] = math.tan(stack[-1])
            elif op == ASIN:
                b = stack[-1]
                if abs(b) > 1.0:
                    err = E_ARCSIN
                    break
                stack[-1] = math.asin(b)
            elif op == ATAN:
                stack[-1] = math.atan(stack[-1])
            elif op == SQRT:
                b = stack[-1]
                if b < 0.0:
                    err = E_SQRT
                    break
                stack[-1] = math.sqrt(b)
        if err == OK:
            v = stack[0]
            out[p] = v
            if not math.isfinite(v):
                err = E_NONFINITE
        else:
            out[p] = 0.0
        status[p] = err
