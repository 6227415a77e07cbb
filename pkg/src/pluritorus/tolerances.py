"""Centralized numeric tolerances.

Every acceptance threshold in the toolkit routes through one instance of
:class:`Tolerances` so that reruns are reproducible and thresholds are
never scattered through the code.  The defaults below are the contract.
"""

from __future__ import annotations

from dataclasses import dataclass


@dataclass(frozen=True)
class Tolerances:
    #: positive-definiteness floor for reference metrics
    eps_pd: float = 1e-10
    #: entrywise tolerance for deciding class equality of closed forms
    tol_class: float = 1e-12
    #: slack threshold for accepting a potential as admissible (psh membership)
    tol_psh: float = 1e-8
    #: eigenvalue slack allowed by the strict-positivity certificate
    tol_cert: float = 1e-9
    #: "exact" identities of the closed kind (telescoping sums)
    tol_exact: float = 1e-12
    #: closed-kind mass defect in d >= 2 is bounded by stokes_factor * h^2
    stokes_factor: float = 10.0
    #: envelope contact-set leakage bound: contact_factor * h^2 * total mass
    contact_factor: float = 10.0
    #: relative part of the mass-comparison slack
    mono_base: float = 1e-8
    #: sup-norm update threshold for envelope sweeps
    envelope_update: float = 1e-10
    #: hard cap on envelope sweeps before NonConvergence is raised
    envelope_max_sweeps: int = 200000
    #: extra sweeps allowed to polish an envelope to exact stationarity
    envelope_polish_sweeps: int = 6000
    #: iterates this far below the obstacle minimum flag infeasibility
    divergence_drop: float = 1e8
    #: relative residual target of the twisted solver: solve_rtol*(1+max f)
    solve_rtol: float = 1e-8
    #: Newton iteration cap
    max_newton_iter: int = 500
    #: continuation stops when |c_j - c_{j-1}| <= continuation_c_rtol * c_j
    continuation_c_rtol: float = 1e-8
    #: ... and the normalized iterates move less than this in sup norm
    continuation_v_atol: float = 1e-6
    #: cap on continuation steps
    max_continuation_steps: int = 48

    def tol_mono(self, lhs: float, rhs: float) -> float:
        """Slack for mass comparisons, scaled by the magnitudes involved."""
        return self.mono_base * (1.0 + abs(lhs) + abs(rhs))


DEFAULT_TOLS = Tolerances()
