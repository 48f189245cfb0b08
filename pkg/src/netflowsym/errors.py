"""Exception hierarchy shared across the package."""


class NetflowError(Exception):
    """Base class for all errors raised by netflowsym."""


class BadIndex(NetflowError):
    """An edge refers to a node index that does not exist."""


class SelfLoop(NetflowError):
    """An edge starts and ends at the same node; loops are not supported."""


class IsolatedNode(NetflowError):
    """A declared node has no incident edge."""


class NotLayerGraph(NetflowError):
    """The graph admits no layer decomposition."""


class NotSymmetricLayerGraph(NetflowError):
    """The graph is not a layer graph with layer-constant node degrees."""


class NotConstant(NetflowError):
    """The operation requires an x-independent coefficient field."""


class OutOfDomain(NetflowError):
    """Evaluation point lies outside [0, 1]."""


class DimensionMismatch(NetflowError):
    """Matrix or vector dimensions are inconsistent with the graph."""


class DiscontinuousAtNode(NetflowError):
    """Edge functions disagree at a shared node beyond tolerance."""


class NotContinuous(NetflowError):
    """Endpoint traces do not come from a node-continuous function."""


class SolverFailure(NetflowError):
    """A linear solve failed (singular factorization or non-finite result)."""


class NotSelfAdjoint(NetflowError):
    """The assembled system is not Hermitian."""


class NotProjection(NetflowError):
    """A matrix fails the orthogonal-projection invariants K* = K = K^2."""


class NotAdmissible(NetflowError):
    """The projection does not map the node-continuous space into itself."""


class NotBipartite(NetflowError):
    """The graph has a node with both incoming and outgoing edges."""


class ParseError(NetflowError):
    """A problem bundle or input file could not be parsed."""
