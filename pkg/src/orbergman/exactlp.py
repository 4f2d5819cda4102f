"""Dense two-phase simplex over exact rationals.

Small helper for the weight solver: the systems it sees have at most a few
dozen variables, so a plain tableau with Fraction entries and Bland's rule
(deterministic, cycle-free) is all we need.
"""

from fractions import Fraction

from .errors import Infeasible

_ZERO = Fraction(0)
_ONE = Fraction(1)


def _pivot(tableau, basis, row, col):
    piv = tableau[row][col]
    tableau[row] = [v / piv for v in tableau[row]]
    prow = tableau[row]
    for r, vec in enumerate(tableau):
        if r != row and vec[col] != 0:
            f = vec[col]
            tableau[r] = [a - f * b for a, b in zip(vec, prow)]
    basis[row] = col


def _optimize(tableau, basis, ncols):
    """Run Bland-rule pivots until the reduced costs are non-negative."""
    while True:
        cost = tableau[-1]
        enter = next((j for j in range(ncols) if cost[j] < 0), None)
        if enter is None:
            return
        best_key = None
        best_row = None
        for r in range(len(tableau) - 1):
            a = tableau[r][enter]
            if a > 0:
                key = (tableau[r][-1] / a, basis[r])
                if best_key is None or key < best_key:
                    best_key, best_row = key, r
        if best_row is None:
            raise ArithmeticError("unbounded linear program")
        _pivot(tableau, basis, best_row, enter)


def solve_standard_form(A, b, c):
    """Minimize c.x subject to A x = b, x >= 0, exactly.

    Returns (optimal value, x) as Fractions. Raises Infeasible when the
    constraints admit no solution.
    """
    nrows = len(A)
    ncols = len(c)
    A = [[Fraction(v) for v in row] for row in A]
    b = [Fraction(v) for v in b]
    c = [Fraction(v) for v in c]
    for i in range(nrows):
        if b[i] < 0:
            A[i] = [-v for v in A[i]]
            b[i] = -b[i]

    # Phase 1: artificial variables, minimize their sum.
    width = ncols + nrows
    tableau = [A[i] + [_ONE if j == i else _ZERO for j in range(nrows)] + [b[i]]
               for i in range(nrows)]
    basis = [ncols + i for i in range(nrows)]
    cost = [_ZERO] * ncols + [_ONE] * nrows + [_ZERO]
    # Make the cost row consistent with the artificial basis.
    for i in range(nrows):
        cost = [cv - rv for cv, rv in zip(cost, tableau[i])]
    tableau.append(cost)
    _optimize(tableau, basis, width)
    if tableau[-1][-1] != 0:
        raise Infeasible("no feasible point for the exact linear system")

    # Drive leftover artificials out of the basis, dropping redundant rows.
    keep = []
    for r in range(nrows):
        if basis[r] >= ncols:
            enter = next((j for j in range(ncols) if tableau[r][j] != 0), None)
            if enter is None:
                continue  # redundant constraint
            _pivot(tableau, basis, r, enter)
        keep.append(r)
    tableau = [tableau[r] for r in keep] + [tableau[-1]]
    basis = [basis[r] for r in keep]

    # Phase 2 on the original objective.
    for row in tableau[:-1]:
        del row[ncols:width]
    cost = list(c) + [_ZERO]
    for r, bj in enumerate(basis):
        if cost[bj] != 0:
            f = cost[bj]
            cost = [cv - f * rv for cv, rv in zip(cost, tableau[r])]
    tableau[-1] = cost
    _optimize(tableau, basis, ncols)

    x = [_ZERO] * ncols
    for r, bj in enumerate(basis):
        x[bj] = tableau[r][-1]
    return -tableau[-1][-1], x


def feasible_point(A, b, lower):
    """Find x with A x = b and x_j >= lower_j, or raise Infeasible.

    Implemented by shifting to standard form; only feasibility is needed,
    so the phase-2 objective is zero.
    """
    shifted = [bi - sum(a * l for a, l in zip(row, lower)) for row, bi in zip(A, b)]
    _, y = solve_standard_form(A, shifted, [_ZERO] * len(lower))
    return [yi + li for yi, li in zip(y, lower)]


def minimize_total(A, b, lower):
    """Minimize sum(x) with A x = b and x_j >= lower_j, exactly."""
    shifted = [bi - sum(a * l for a, l in zip(row, lower)) for row, bi in zip(A, b)]
    _, y = solve_standard_form(A, shifted, [_ONE] * len(lower))
    return [yi + li for yi, li in zip(y, lower)]
