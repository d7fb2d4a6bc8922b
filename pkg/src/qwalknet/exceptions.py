class QWalkError(Exception):
    """Base class for all errors raised by qwalknet."""


class TopologyError(QWalkError, ValueError):
    pass


class StateError(QWalkError, ValueError):
    pass


class OperatorError(QWalkError, ValueError):
    pass


class ProtocolError(QWalkError, RuntimeError):
    pass


class ConfigError(QWalkError, ValueError):
    pass
