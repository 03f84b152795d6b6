"""Density calibration from coupling-off absorption and chi3 extraction."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.optimize import least_squares

from .optics import resonant_cross_section

# density fit works in units of 1e10 cm^-3
DENSITY_UNIT = 1e16


class FitError(RuntimeError):
    pass


@dataclass(frozen=True)
class DensityFit:
    density: float
    center: float
    density_err: float
    center_err: float
    residual_rms: float
    nfev: int

    def as_dict(self) -> dict:
        return {
            "density_m3": self.density,
            "density_cm3": self.density * 1e-6,
            "center_MHz": self.center,
            "density_err_m3": self.density_err,
            "density_err_cm3": self.density_err * 1e-6,
            "center_err_MHz": self.center_err,
            "residual_rms": self.residual_rms,
            "nfev": self.nfev,
        }


@dataclass(frozen=True)
class Chi3Fit:
    chi1_im: float
    chi3_im: float
    cutoff_field: float
    residual: float
    n_points: int

    def as_dict(self) -> dict:
        return {
            "chi1_im": self.chi1_im,
            "chi3_im_m2_per_V2": self.chi3_im,
            "cutoff_field_V_per_m": self.cutoff_field,
            "residual_rms": self.residual,
            "n_points": self.n_points,
        }


def absorption_profile(delta, density, center, path_length, wavevector, gamma_e):
    """Weak-probe two-level Beer-Lambert transmission; ``delta``, ``center``, ``gamma_e`` in MHz."""
    od = density * resonant_cross_section(wavevector) * path_length
    return np.exp(-od / (1.0 + 4.0 * (np.asarray(delta) - center) ** 2 / gamma_e**2))


def fit_density(delta, trans, path_length: float, wavevector: float, gamma_e: float = 6.07,
                sigma=None, max_nfev: int = 2000) -> DensityFit:
    """Least-squares fit of ground-state density and line centre to a coupling-off spectrum.

    Uses Levenberg-Marquardt. Uncertainties come from the Jacobian at the
    optimum, scaled by the reduced chi-square unless ``sigma`` is given.
    """
    delta = np.asarray(delta, dtype=float)
    trans = np.asarray(trans, dtype=float)
    if delta.shape != trans.shape or delta.ndim != 1:
        raise ValueError("detuning and transmission must be matching 1-d arrays")
    if delta.size < 4:
        raise ValueError(f"need at least 4 points to fit density, got {delta.size}")
    if np.ptp(delta) < 4.0 * gamma_e:
        raise ValueError(f"spectrum spans {np.ptp(delta):.3g} MHz, fewer than 4 linewidths")
    if not np.all(np.isfinite(trans)) or np.any(trans <= 0):
        raise ValueError("transmission values must be finite and positive")
    if np.ptp(trans) < 1e-6:
        raise FitError("flat spectrum: no absorption feature to fit")
    weights = np.ones_like(trans) if sigma is None else 1.0 / np.broadcast_to(np.asarray(sigma, float), trans.shape)

    xs = resonant_cross_section(wavevector) * path_length * DENSITY_UNIT
    i_min = int(np.argmin(trans))
    p0 = np.array([-np.log(trans[i_min]) / xs, delta[i_min]])

    def residuals(p):
        model = np.exp(-p[0] * xs / (1.0 + 4.0 * (delta - p[1]) ** 2 / gamma_e**2))
        return (model - trans) * weights

    res = least_squares(residuals, p0, method="lm", max_nfev=max_nfev, xtol=1e-14, ftol=1e-14, gtol=1e-14)
    if not res.success:
        raise FitError(f"density fit did not converge: {res.message}")
    dof = max(delta.size - 2, 1)
    jtj = res.jac.T @ res.jac
    try:
        cov = np.linalg.inv(jtj)
    except np.linalg.LinAlgError as exc:
        raise FitError("degenerate Jacobian at the optimum") from exc
    if sigma is None:
        cov = cov * (2.0 * res.cost / dof)
    err = np.sqrt(np.maximum(np.diag(cov), 0.0))
    return DensityFit(
        density=float(res.x[0] * DENSITY_UNIT),
        center=float(res.x[1]),
        density_err=float(err[0] * DENSITY_UNIT),
        center_err=float(err[1]),
        residual_rms=float(np.sqrt(np.mean((res.fun / weights) ** 2))),
        nfev=int(res.nfev),
    )


def fit_chi3(fields, chi_i, cutoff_field: float, degenerate_kerr: bool = False) -> Chi3Fit:
    """Fit ``chi_i = a + b E^2`` for ``E <= cutoff_field``.

    ``chi3_im`` is ``b`` itself; with ``degenerate_kerr`` it is ``4 b / 3``,
    the convention where the intensity-dependent part is ``(3/4) chi3 E^2``.
    """
    fields = np.asarray(fields, dtype=float)
    chi_i = np.asarray(chi_i, dtype=float)
    if fields.shape != chi_i.shape:
        raise ValueError("fields and chi_i must have equal length")
    if cutoff_field < np.min(fields) or cutoff_field > np.max(fields):
        raise ValueError("cutoff field lies outside the data range")
    mask = fields <= cutoff_field
    if np.count_nonzero(mask) < 3:
        raise ValueError("need at least 3 points below the cutoff")
    e2 = fields[mask] ** 2
    design = np.column_stack([np.ones_like(e2), e2])
    coef, _, rank, _ = np.linalg.lstsq(design, chi_i[mask], rcond=None)
    if rank < 2:
        raise FitError("rank-deficient chi3 fit: fields below cutoff are not distinct")
    resid = chi_i[mask] - design @ coef
    b = coef[1] * (4.0 / 3.0 if degenerate_kerr else 1.0)
    return Chi3Fit(
        chi1_im=float(coef[0]),
        chi3_im=float(b),
        cutoff_field=float(cutoff_field),
        residual=float(np.sqrt(np.mean(resid**2))),
        n_points=int(mask.sum()),
    )
