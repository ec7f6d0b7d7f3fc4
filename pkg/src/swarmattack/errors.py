"""Exception types shared across the package."""


class SwarmAttackError(Exception):
    """Base class for all errors raised by this package."""


class ParseError(SwarmAttackError):
    """A file or wire payload does not conform to its format."""


class ValidationError(SwarmAttackError):
    """Parsed data violates a structural invariant (empty sememe set, duplicate word, ...)."""


class EmptyCorpus(SwarmAttackError):
    """A corpus-level operation received no usable sentences."""


class EmptyAfterFilter(SwarmAttackError):
    """Benchmark filtering left no attackable instances."""


class LengthOutOfBounds(SwarmAttackError):
    """Input sentence length falls outside the configured bounds."""


class NoCandidates(SwarmAttackError):
    """Every position has a singleton candidate list; no substitution is possible."""


class LengthMismatch(SwarmAttackError):
    """Two assignments of different lengths were compared."""


class IndexOutOfRange(SwarmAttackError):
    """An assignment indexes past the end of a candidate list."""


class IterationOutOfRange(SwarmAttackError):
    """Schedule evaluated outside 0..max_iters."""


class PreconditionViolated(SwarmAttackError):
    """Attack precondition failed (original already target, or nothing to substitute)."""


class SpaceTooLarge(SwarmAttackError):
    """Candidate product exceeds the exhaustive-search cap."""


class ProtocolError(SwarmAttackError):
    """Malformed reply from a victim server."""


class ConnectFailed(SwarmAttackError):
    """Could not reach or spawn a remote victim."""


class HandshakeMismatch(SwarmAttackError):
    """Remote manifest reply is missing required fields or is inconsistent."""


class LabelMismatch(SwarmAttackError):
    """Probability vector or stored label disagrees with the victim's label set."""


class Timeout(SwarmAttackError):
    """Remote victim did not answer in time."""


class ConfigError(SwarmAttackError):
    """Invalid configuration value or file."""
