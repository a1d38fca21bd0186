"""Central Student-t tail probabilities via the regularized incomplete beta.

For t >= 0 and df = v the two-sided tail is P(|T| >= t) = I_x(v/2, 1/2)
with x = v / (v + t^2); the distribution function follows from symmetry.
"""

import numpy as np
from scipy import special


def _check_df(df):
    if df < 1:
        raise ValueError(f"degrees of freedom must be >= 1, got {df}")
    return float(df)


def two_sided_p(t, df):
    """P(|T_df| >= |t|); equals 1 at t = 0."""
    df = _check_df(df)
    t = np.asarray(t, dtype=float)
    p = special.betainc(df / 2.0, 0.5, df / (df + t * t))
    return float(p) if p.ndim == 0 else p


def student_t_sf(t, df):
    """Upper tail P(T_df > t)."""
    df = _check_df(df)
    t = np.asarray(t, dtype=float)
    half_tail = 0.5 * special.betainc(df / 2.0, 0.5, df / (df + t * t))
    sf = np.where(t >= 0, half_tail, 1.0 - half_tail)
    return float(sf) if sf.ndim == 0 else sf


def student_t_cdf(t, df):
    """P(T_df <= t)."""
    sf = student_t_sf(t, df)
    return 1.0 - sf
