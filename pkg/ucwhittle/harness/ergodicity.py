"""Mixing diagnostic for binary-state instances and the square-root-sum bound."""
import itertools
import math
from typing import Optional, Sequence, Tuple

import numpy as np
from pydantic import BaseModel, Field

from ucwhittle.domains.instance import RmabInstance

# Second-eigenvalue magnitudes within this of 0 or 1 count as exact
EIGEN_TOL = 1e-12


class ErgodicityReport(BaseModel):
    """Worst-case mixing over all arms and deterministic policies."""

    omega2: float = Field(..., ge=0.0, le=1.0, description="Largest second-eigenvalue magnitude")
    r: float = Field(..., ge=0.0, description="Smallest stationary probability")
    epsilon: float = Field(..., ge=0.0, description="Ergodicity constant, r/2 unless overridden")
    h_required: Optional[float] = Field(None, description="Steps needed for epsilon-ergodicity")
    horizon: Optional[int] = Field(None, description="Configured horizon H")
    ergodic: bool = True
    mixes_in_one_step: bool = False

    @property
    def sufficient(self) -> Optional[bool]:
        """Whether the configured horizon reaches ``h_required``."""
        if not self.ergodic:
            return False
        if self.horizon is None or self.h_required is None:
            return None
        return self.horizon >= self.h_required

    def render(self) -> str:
        lines = [
            f"omega2 = {self.omega2:.6f}",
            f"r = {self.r:.6f}",
            f"epsilon = {self.epsilon:.6f}",
        ]
        if not self.ergodic:
            lines.append("status = non-ergodic: some policy induces a chain that never mixes")
            return "\n".join(lines) + "\n"
        lines.append(f"H_required = {self.h_required:.4f}")
        if self.mixes_in_one_step:
            lines.append("note = mixes in one step")
        if self.horizon is not None:
            lines.append(f"H = {self.horizon}")
            lines.append(f"status = {'ok' if self.sufficient else 'horizon below H_required'}")
        return "\n".join(lines) + "\n"


def chain_spectrum(p01: float, p10: float) -> Tuple[float, np.ndarray]:
    """Second-eigenvalue magnitude and stationary distribution of a 2-state chain."""
    total = p01 + p10
    omega = abs(1.0 - total)
    if total <= 0.0:
        return 1.0, np.array([np.nan, np.nan])
    return omega, np.array([p10 / total, p01 / total])


def ergodicity_diagnostic(
    instance: RmabInstance,
    epsilon_override: Optional[float] = None,
    horizon: Optional[int] = None,
) -> ErgodicityReport:
    """Worst mixing rate and the horizon needed for epsilon-ergodicity.

    Every deterministic per-arm policy induces a 2-state chain with second
    eigenvalue 1 - P(0->1) - P(1->0); the worst magnitude is omega2 and the
    smallest stationary mass is r. H_required = log_omega2(sqrt(2) eps^1.5).

    Raises:
        ValueError: for instances that are not 2-state.
    """
    if instance.num_states != 2:
        raise ValueError("the ergodicity diagnostic needs a 2-state instance")
    omega2, r = 0.0, 1.0
    for kernel in instance.kernels:
        probs = kernel.probs
        for policy in itertools.product(range(kernel.num_actions), repeat=2):
            omega, stationary = chain_spectrum(probs[0, policy[0], 1], probs[1, policy[1], 0])
            omega2 = max(omega2, omega)
            # A chain with no transitions between states has no unique stationary law
            r = 0.0 if np.isnan(stationary).any() else min(r, float(stationary.min()))

    omega2 = min(omega2, 1.0)
    epsilon = r / 2.0 if epsilon_override is None else epsilon_override
    if omega2 >= 1.0 - EIGEN_TOL or r <= 0.0:
        return ErgodicityReport(omega2=omega2, r=max(r, 0.0), epsilon=epsilon, horizon=horizon, ergodic=False)
    if omega2 <= EIGEN_TOL:
        return ErgodicityReport(
            omega2=omega2, r=r, epsilon=epsilon, h_required=1.0, horizon=horizon, mixes_in_one_step=True
        )
    h_required = math.log(math.sqrt(2.0) * epsilon ** 1.5) / math.log(omega2)
    return ErgodicityReport(omega2=omega2, r=r, epsilon=epsilon, h_required=h_required, horizon=horizon)


def sequence_bound(z: Sequence[float], horizon: float) -> Tuple[float, float]:
    """Both sides of sum z_t / sqrt(Z_{t-1}) <= (sqrt(H+1) + 1) sqrt(Z_T).

    Z_t = max(1, z_1 + ... + z_t) and Z_0 = 1; the bound holds for 0 <= z_t <= H.

    Returns:
        (lhs, rhs)
    """
    z = np.asarray(z, dtype=float)
    if np.any(z < 0.0) or np.any(z > horizon):
        raise ValueError(f"sequence entries must lie in [0, {horizon}]")
    cumulative = np.maximum(1.0, np.cumsum(z))
    previous = np.concatenate(([1.0], cumulative[:-1]))
    lhs = float(np.sum(z / np.sqrt(previous)))
    z_total = cumulative[-1] if z.size else 1.0
    rhs = (math.sqrt(horizon + 1.0) + 1.0) * math.sqrt(z_total)
    return lhs, rhs
