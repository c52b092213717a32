"""Extended-precision (50-digit) re-evaluation of the coding closed forms.

This is the independent oracle for the codec and privacy tests: it never
calls the library's own evaluation path, only mpmath arithmetic on the
published formulas.
"""

import mpmath as mp

mp.mp.dps = 50


def berrut_basis_mp(z, nodes):
    terms = [((-1) ** i) / (mp.mpf(z) - mp.mpf(a)) for i, a in enumerate(nodes)]
    total = mp.fsum(terms)
    return [t / total for t in terms]


def berrut_eval_mp(z, nodes, values):
    """Interpolant through scalar ``values`` at ``z``; exact at nodes."""
    for i, a in enumerate(nodes):
        if mp.mpf(z) == mp.mpf(a):
            return mp.mpf(values[i])
    basis = berrut_basis_mp(z, nodes)
    return mp.fsum(q * mp.mpf(v) for q, v in zip(basis, values))


def encode_share_mp(beta, alphas, data_values, noise_values):
    """One scalar share: the interpolant over data plus noise coefficients."""
    coeffs = list(data_values) + list(noise_values)
    return berrut_eval_mp(beta, alphas, coeffs)


def sigma_entry_mp(beta, alphas, column):
    """q_column(beta) over the full alpha list."""
    return berrut_basis_mp(beta, alphas)[column]
