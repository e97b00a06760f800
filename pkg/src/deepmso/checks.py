"""Invariant and diagnostic suite behind the ``check`` subcommand."""
from dataclasses import dataclass, replace

import numpy as np

from deepmso import plant as pl
from deepmso.sim import lyapunov_diagnostic, run_episode, tracking_metrics

RMS_RATIO_MAX = 0.25
JOINT_RMS_MAX = 0.05
LYAPUNOV_FRACTION_MAX = 0.01
IDENTITY_TOL = 1e-12


@dataclass
class CheckResult:
    name: str
    passed: bool
    detail: str

    def line(self):
        return f"{'PASS' if self.passed else 'FAIL'}  {self.name}: {self.detail}"


def error_identity_residual(log):
    return float(np.max(np.abs(log.e_r - (log.e_a + log.e_hat_r)), initial=0.0))


def inertia_checks(p, n=1000, seed=0):
    """Smallest eigenvalue of ``M`` and largest ``|S + S^T|`` for ``S = Mdot - 2 Vm`` over random states."""
    rng = np.random.default_rng(seed)
    min_eig = np.inf
    skew = 0.0
    for x in rng.uniform([-np.pi, -np.pi, -5, -5], [np.pi, np.pi, 5, 5], size=(n, 4)):
        M, Vm, _ = pl.manipulator_matrices(p, x)
        min_eig = min(min_eig, np.linalg.eigvalsh(M)[0])
        S = pl.inertia_rate(p, x) - 2 * Vm
        skew = max(skew, float(np.max(np.abs(S + S.T))))
    return float(min_eig), skew


def run_checks(cfg):
    on = run_episode(replace(cfg, nn=True, oracle=False))
    off = run_episode(replace(cfg, nn=False, oracle=False))
    results = []
    for tag, log in (("on", on), ("off", off)):
        finite = all(np.all(np.isfinite(a)) for a in (log.x, log.x_hat, log.u, log.f_hat))
        results.append(CheckResult(
            f"run[{tag}] complete", not log.aborted and finite,
            f"{len(log)} records" + (f", aborted {log.abort_reason}" if log.aborted else ""),
        ))
        res = error_identity_residual(log)
        results.append(CheckResult(f"error identity[{tag}]", res <= IDENTITY_TOL, f"max residual {res:.3g}"))
    bound = on.meta["max_abs_weight"]
    results.append(CheckResult(
        "weight bound", bound <= cfg.madam.sigma_star, f"max |w| {bound:.4g} <= {cfg.madam.sigma_star:g}"
    ))
    if not (on.aborted or off.aborted):
        m_on = tracking_metrics(on, cfg.settle)
        m_off = tracking_metrics(off, cfg.settle)
        ratio = m_on["rms_e_r"] / m_off["rms_e_r"]
        results.append(CheckResult(
            "on/off rms ratio", ratio <= RMS_RATIO_MAX, f"{ratio:.4g} <= {RMS_RATIO_MAX}"
        ))
        worst = max(m_on["rms_joint"])
        results.append(CheckResult(
            "joint rms (on)", worst <= JOINT_RMS_MAX, f"{worst:.4g} rad <= {JOINT_RMS_MAX}"
        ))
        diag = lyapunov_diagnostic(on, cfg.settle)
        results.append(CheckResult(
            "lyapunov violations", diag["fraction"] <= LYAPUNOV_FRACTION_MAX,
            f"{diag['violations']}/{diag['steps']} steps, eps_hat {diag['epsilon_hat']:.4g}",
        ))
    min_eig, skew = inertia_checks(cfg.plant)
    results.append(CheckResult("inertia positive definite", min_eig > 0, f"min eigenvalue {min_eig:.4g}"))
    results.append(CheckResult("Mdot - 2Vm skew", skew < 1e-6, f"max |S+S^T| {skew:.3g}"))
    return results, on, off
