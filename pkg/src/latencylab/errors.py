"""Exception hierarchy shared across latencylab."""


class LatencyLabError(Exception):
    """Base class for all package errors."""


class FeedError(LatencyLabError):
    pass


class IncompleteFrame(FeedError):
    """Not enough bytes for a complete EQB-1 frame."""

    def __init__(self, msg="incomplete"):
        super().__init__(msg)


class UnknownMessage(FeedError):
    def __init__(self, type_byte):
        super().__init__(f"unknown message type {type_byte!r}")
        self.type_byte = type_byte


class MalformedMessage(FeedError):
    pass


class OrphanMessage(FeedError):
    """Message references an order id the book has never seen."""

    def __init__(self, order_id):
        super().__init__(f"orphan message: order {order_id} not on book")
        self.order_id = order_id


class Overfill(FeedError):
    def __init__(self, order_id, requested, remaining):
        super().__init__(
            f"overfill: order {order_id} has {remaining} shares, {requested} requested"
        )
        self.order_id = order_id


class FeedFormatError(FeedError):
    """Malformed CSV row; ``line`` is 1-based and counts the header."""

    def __init__(self, line, reason):
        super().__init__(f"line {line}: {reason}")
        self.line = line
        self.reason = reason


class UnsortedInput(LatencyLabError):
    pass


class NoEventsError(LatencyLabError):
    def __init__(self, msg="no events"):
        super().__init__(msg)


class UndefinedQuantile(LatencyLabError):
    def __init__(self, msg="undefined quantile"):
        super().__init__(msg)


class DegenerateUncertainty(LatencyLabError):
    def __init__(self, msg="degenerate uncertainty"):
        super().__init__(msg)


class InfeasibleConfig(LatencyLabError):
    pass


class NoConnectivity(LatencyLabError):
    def __init__(self, msg="no connectivity"):
        super().__init__(msg)


class GreedyStuck(LatencyLabError):
    def __init__(self, at_node, steps):
        super().__init__(f"greedy stuck at node {at_node} after {steps} hops")
        self.at_node = at_node
        self.steps = steps


class CycleDetected(LatencyLabError):
    def __init__(self, licensee):
        super().__init__(f"cycle detected in links of {licensee!r}")
        self.licensee = licensee
