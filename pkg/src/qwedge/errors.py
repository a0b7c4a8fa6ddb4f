"""Exception types shared across the simulation modules."""


class QwedgeError(Exception):
    """Base class for all package-specific errors."""


class ConfigError(QwedgeError):
    """A scenario configuration is malformed or inconsistent."""


class NodeProximity(QwedgeError):
    """The wavefunction density at the queried point is below the node floor.

    The guidance velocity v = Im(grad psi / psi) is ill-conditioned there;
    integrators respond by shrinking the step.
    """


class StepUnderflow(QwedgeError):
    """Adaptive step size fell below the hard minimum (node trapping)."""


class BranchesNotSeparated(QwedgeError):
    """Electron branch packets overlap too much for an impulsive coupling."""


class InconsistentFamily(QwedgeError):
    """Probabilities requested for a family that fails the consistency check."""


class ZeroConditioningEvent(QwedgeError):
    """Conditional probability requested on an event of zero weight."""


class BasisNotOrthogonal(QwedgeError):
    """Packets offered as a labeled basis are not mutually orthogonal."""
