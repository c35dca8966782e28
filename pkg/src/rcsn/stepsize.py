"""Trial stepsize strategies for the backtracking line search."""
from __future__ import annotations

from collections import deque

__all__ = ["ConstantStep", "SelfAdaptiveStep"]


class ConstantStep:
    """Always propose the same trial stepsize.

    Parameters
    ----------
    tau_bar : float
        Trial stepsize, 50 by default.
    """

    def __init__(self, tau_bar=50.0):
        if not tau_bar > 0:
            raise ValueError("tau_bar must be positive")
        self.tau_bar = float(tau_bar)

    @property
    def t_min(self):
        return self.tau_bar

    def reset(self):
        pass

    def next_trial(self):
        return self.tau_bar

    def update(self, trial, accepted):
        pass

    def __repr__(self):
        return f"ConstantStep(tau_bar={self.tau_bar!r})"


class SelfAdaptiveStep:
    """Grow the trial after two unshrunk steps, otherwise reuse the last one.

    The first trial is ``max(tau0, t_min)``. Afterwards the trial is
    ``gamma * tau_prev`` when the two previous trials were both accepted
    without backtracking and ``max(tau_prev, t_min)`` otherwise.

    Parameters
    ----------
    gamma : float
        Growth factor, greater than one.
    t_min : float
        Smallest trial ever emitted.
    tau0 : float
        Initial trial.
    """

    def __init__(self, gamma=2.0, t_min=1e-8, tau0=1.0):
        if not gamma > 1:
            raise ValueError("gamma must exceed 1")
        if not t_min > 0:
            raise ValueError("t_min must be positive")
        self.gamma = float(gamma)
        self.t_min = float(t_min)
        self.tau0 = float(tau0)
        self.reset()

    def reset(self):
        self._history = deque(maxlen=2)

    @property
    def history(self):
        return list(self._history)

    def next_trial(self):
        if not self._history:
            return max(self.tau0, self.t_min)
        last_trial, last_tau = self._history[-1]
        if len(self._history) == 2 and all(t == a for t, a in self._history):
            return max(self.gamma * last_tau, self.t_min)
        return max(last_tau, self.t_min)

    def update(self, trial, accepted):
        self._history.append((float(trial), float(accepted)))

    def __repr__(self):
        return (f"SelfAdaptiveStep(gamma={self.gamma!r}, t_min={self.t_min!r}, "
                f"tau0={self.tau0!r})")
