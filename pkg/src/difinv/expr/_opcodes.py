"""Opcode numbering shared by the compiled and the pure-Python evaluators."""

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
# shared subexpressions: STORE copies the stack top into register ``arg``,
# LOAD pushes it back
STORE = 15
LOAD = 16

# status codes written per evaluation point
OK = 0
E_LN = 1
E_SQRT = 2
E_ARCSIN = 3
E_DIVISION = 4
E_POW = 5
E_COMPLEX = 6
E_NONFINITE = 7

STATUS_KIND = {
    E_LN: "ln",
    E_SQRT: "sqrt",
    E_ARCSIN: "arcsin",
    E_DIVISION: "division",
    E_POW: "pow",
    E_COMPLEX: "pow",
    E_NONFINITE: "nonfinite",
}

FUNC_OPS = {
    "exp": EXP, "ln": LN, "sin": SIN, "cos": COS, "tan": TAN,
    "arcsin": ASIN, "arctan": ATAN, "sqrt": SQRT,
}
