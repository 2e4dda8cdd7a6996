"""Exception hierarchy shared by the numerical modules."""


class LyapRigidError(Exception):
    """Base class for all package errors."""


class ToleranceFailure(LyapRigidError):
    """Adaptive stepping could not meet the requested tolerance."""


class BlowUp(LyapRigidError):
    """Riccati solution left the admissible ceiling (conjugate point)."""

    def __init__(self, t_star, norm):
        super().__init__(f"Riccati solution blew up at t*={t_star:.12g} (norm {norm:.3g})")
        self.t_star = t_star
        self.norm = norm


class NoConvergence(LyapRigidError):
    """An iterative scheme stalled; ``history`` holds the residual sequence."""

    def __init__(self, message, history=()):
        super().__init__(message)
        self.history = list(history)


class ChainViolation(LyapRigidError):
    def __init__(self, link, magnitude):
        super().__init__(f"trace chain link {link!r} violated by {magnitude:.3g}")
        self.link = link
        self.magnitude = magnitude


class NotHyperbolic(LyapRigidError):
    pass


class MaxIterations(LyapRigidError):
    pass


class PositiveCurvature(LyapRigidError):
    def __init__(self, z, value):
        super().__init__(f"non-negative curvature K={value:.6g} at z={z!r}")
        self.z = z
        self.value = value


class LimitSetEscape(LyapRigidError):
    """Trajectory left the convex core into a funnel."""


class WrongDeckWord(LyapRigidError):
    def __init__(self, expected, got):
        super().__init__(f"converged orbit codes as {got!r}, expected a rotation of {expected!r}")
        self.expected = expected
        self.got = got


class InsufficientSamples(LyapRigidError):
    pass


class ConfigError(LyapRigidError):
    def __init__(self, key, message):
        super().__init__(f"config key {key!r}: {message}")
        self.key = key
