"""Special functions for the extension problem.

Gamma, the modified Bessel function of the second kind K_nu for orders in
(0, 1], and the one-dimensional extension profile

    psi(y) = c_s (sqrt(lam) y)^s K_s(sqrt(lam) y),     psi(0) = 1,

which solves psi'' + (alpha / y) psi' - lam psi = 0 and decays at infinity.

K_nu follows Temme's method: a power series in (x/2)^2 for x < 2 and
Steed's continued fraction for x >= 2. Everything is carried in exponentially
scaled form e^x K_nu(x) so that arguments of several hundred do not
underflow before the final exponentiation.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

from .exceptions import DomainError, SingularPointError

EPS = 1.0e-16
MAXIT = 10000
XMIN = 2.0
# log of the smallest positive normal double
LOG_TINY = math.log(2.2250738585072014e-308)

# Taylor coefficients of 1/Gamma(1 + x) about x = 0
_RGAMMA_TAYLOR = (
    1.0,
    0.57721566490153286061,
    -0.65587807152025388108,
    -0.042002635034095235529,
    0.1665386113822914895,
    -0.042197734555544336748,
    -0.0096219715278769735621,
    0.0072189432466630995424,
    -0.0011651675918590651121,
    -0.00021524167411495097282,
    0.00012805028238811618615,
    -0.000020134854780788238656,
    -1.2504934821426706573e-6,
    1.1330272319816958824e-6,
    -2.0563384169776071035e-7,
    6.1160951044814158179e-9,
    5.0020076444692229301e-9,
    -1.1812745704870201446e-9,
    1.0434267116911005105e-10,
    7.782263439905071254e-12,
    -3.6968056186422057082e-12,
    5.100370287454475979e-13,
    -2.0583260535665067832e-14,
    -5.3481225394230179824e-15,
    1.2267786282382607902e-15,
    -1.1812593016974587695e-16,
    1.1866922547516003326e-18,
)


def gamma_fn(x: float) -> float:
    """Gamma function for positive finite arguments."""
    x = float(x)
    if not math.isfinite(x) or x <= 0.0:
        raise DomainError(f"gamma_fn requires a positive finite argument, got {x!r}")
    return math.gamma(x)


@dataclass(frozen=True)
class FracParams:
    """Fractional order s together with the constants derived from it.

    alpha = 1 - 2s is the weight exponent, d_s = 2^(1-2s) Gamma(1-s)/Gamma(s)
    the Neumann normalization and c_s = 2^(1-s)/Gamma(s) the profile
    normalization that makes psi(0) = 1.
    """

    s: float
    alpha: float = field(init=False)
    d_s: float = field(init=False)
    c_s: float = field(init=False)

    def __post_init__(self):
        s = float(self.s)
        if not (0.0 < s < 1.0):
            raise DomainError(f"fractional order must lie in (0, 1), got {s!r}")
        object.__setattr__(self, "s", s)
        object.__setattr__(self, "alpha", 1.0 - 2.0 * s)
        object.__setattr__(
            self, "d_s", 2.0 ** (1.0 - 2.0 * s) * gamma_fn(1.0 - s) / gamma_fn(s)
        )
        object.__setattr__(self, "c_s", 2.0 ** (1.0 - s) / gamma_fn(s))

    @property
    def is_half(self) -> bool:
        return self.s == 0.5


def _temme_gammas(mu: float) -> tuple[float, float, float, float]:
    # gam1 = (1/G(1-mu) - 1/G(1+mu)) / (2 mu), gam2 = (1/G(1-mu) + 1/G(1+mu)) / 2,
    # from the Taylor series so that mu -> 0 has no cancellation.
    gampl = 0.0
    gammi = 0.0
    gam1 = 0.0
    gam2 = 0.0
    p = 1.0
    for k, ck in enumerate(_RGAMMA_TAYLOR):
        term = ck * p
        gampl += term
        if k % 2:
            gammi -= term
        else:
            gammi += term
            gam2 += term
        p *= mu
    mk = 1.0
    for k in range(1, len(_RGAMMA_TAYLOR), 2):
        gam1 -= _RGAMMA_TAYLOR[k] * mk
        mk *= mu * mu
    return gam1, gam2, gampl, gammi


def bessel_k_scaled(nu: float, x: float) -> float:
    """Return e^x K_nu(x) for 0 < nu <= 1 and x > 0."""
    nl = int(nu + 0.5)
    xmu = nu - nl
    xmu2 = xmu * xmu
    xi = 1.0 / x
    xi2 = 2.0 * xi
    if x < XMIN:
        x2 = 0.5 * x
        pimu = math.pi * xmu
        fact = 1.0 if abs(pimu) < EPS else pimu / math.sin(pimu)
        d = -math.log(x2)
        e = xmu * d
        fact2 = 1.0 if abs(e) < EPS else math.sinh(e) / e
        gam1, gam2, gampl, gammi = _temme_gammas(xmu)
        ff = fact * (gam1 * math.cosh(e) + gam2 * fact2 * d)
        total = ff
        e = math.exp(e)
        p = 0.5 * e / gampl
        q = 0.5 / (e * gammi)
        c = 1.0
        d = x2 * x2
        total1 = p
        for i in range(1, MAXIT):
            ff = (i * ff + p + q) / (i * i - xmu2)
            c *= d / i
            p /= i - xmu
            q /= i + xmu
            delta = c * ff
            total += delta
            total1 += c * (p - i * ff)
            if abs(delta) < abs(total) * EPS:
                break
        scale = math.exp(x)
        rkmu = total * scale
        rk1 = total1 * xi2 * scale
    else:
        b = 2.0 * (1.0 + x)
        d = 1.0 / b
        h = delh = d
        q1 = 0.0
        q2 = 1.0
        a1 = 0.25 - xmu2
        q = c = a1
        a = -a1
        s = 1.0 + q * delh
        for i in range(2, MAXIT):
            a -= 2 * (i - 1)
            c = -a * c / i
            qnew = (q1 - b * q2) / a
            q1 = q2
            q2 = qnew
            q += c * qnew
            b += 2.0
            d = 1.0 / (b + a * d)
            delh = (b * d - 1.0) * delh
            h += delh
            dels = q * delh
            s += dels
            if abs(dels / s) < EPS:
                break
        h = a1 * h
        rkmu = math.sqrt(math.pi / (2.0 * x)) / s
        rk1 = rkmu * (xmu + x + 0.5 - h) * xi
    for i in range(1, nl + 1):
        rkmu, rk1 = rk1, (xmu + i) * xi2 * rk1 + rkmu
    return rkmu


def _check_bessel_args(nu: float, z: float) -> None:
    if not (0.0 < nu <= 1.0):
        raise DomainError(f"bessel_k order must lie in (0, 1], got {nu!r}")
    if not (z > 0.0) or math.isnan(z):
        raise DomainError(f"bessel_k argument must be positive, got {z!r}")


def log_bessel_k(nu: float, z: float) -> float:
    """Natural logarithm of K_nu(z); finite for every positive z."""
    nu = float(nu)
    z = float(z)
    _check_bessel_args(nu, z)
    if math.isinf(z):
        return -math.inf
    return math.log(bessel_k_scaled(nu, z)) - z


def bessel_k(nu: float, z: float, return_underflow: bool = False):
    """Modified Bessel function of the second kind K_nu(z), 0 < nu <= 1.

    When K_nu(z) is below the smallest normal double the result is 0.0; pass
    ``return_underflow=True`` to also receive a flag reporting this.
    """
    logk = log_bessel_k(nu, z)
    underflow = logk < LOG_TINY
    value = 0.0 if underflow else math.exp(logk)
    if return_underflow:
        return value, underflow
    return value


def _check_lambda(lam: float) -> float:
    lam = float(lam)
    if not (lam > 0.0) or not math.isfinite(lam):
        raise DomainError(f"eigenvalue must be positive and finite, got {lam!r}")
    return lam


def psi_pair(params: FracParams, lam: float, y: float) -> tuple[float, float]:
    """Extension profile psi and its derivative d psi / dy at height y.

    At y = 0 with s != 1/2 the derivative is singular (or degenerate), so a
    SingularPointError is raised; use :func:`weighted_flux_limit` for the
    conormal flux there.
    """
    lam = _check_lambda(lam)
    y = float(y)
    if y < 0.0 or math.isnan(y):
        raise DomainError(f"height must be nonnegative, got {y!r}")
    sq = math.sqrt(lam)
    if params.is_half:
        psi = math.exp(-sq * y)
        return psi, -sq * psi
    if y == 0.0:
        raise SingularPointError("d psi / dy is singular at y = 0 for s != 1/2")
    s = params.s
    z = sq * y
    logz = math.log(z)
    log_psi = math.log(params.c_s) + s * logz + math.log(bessel_k_scaled(s, z)) - z
    log_dpsi = (
        math.log(params.c_s * sq) + s * logz + math.log(bessel_k_scaled(1.0 - s, z)) - z
    )
    return _safe_exp(log_psi), -_safe_exp(log_dpsi)


def psi_value(params: FracParams, lam: float, y: float) -> float:
    """psi(y) alone; defined (and equal to 1) at y = 0 for every s."""
    lam = _check_lambda(lam)
    if float(y) == 0.0:
        return 1.0
    return psi_pair(params, lam, y)[0]


def weighted_flux_limit(params: FracParams, lam: float) -> float:
    """Limit of y^alpha psi'(y) as y -> 0+, equal to -d_s lam^s."""
    lam = _check_lambda(lam)
    return -params.d_s * lam**params.s


def _safe_exp(v: float) -> float:
    return 0.0 if v < LOG_TINY else math.exp(v)
