"""Exception hierarchy shared across the pipeline."""


class DiscoprobeError(Exception):
    """Base class for all errors raised by this package."""


# --- corpus ---------------------------------------------------------------

class MalformedRecord(DiscoprobeError):
    def __init__(self, line: int, reason: str):
        super().__init__(f"line {line}: {reason}")
        self.line = line
        self.reason = reason


class DuplicateId(DiscoprobeError):
    def __init__(self, record_id: str):
        super().__init__(f"duplicate record id {record_id!r}")
        self.record_id = record_id


class LevelOutOfRange(DiscoprobeError):
    def __init__(self, level: int):
        super().__init__(f"section nesting level {level} outside [1, 7]")
        self.level = level


class EmptyCorpus(DiscoprobeError):
    pass


class DimMismatch(DiscoprobeError):
    def __init__(self, expected, found):
        super().__init__(f"dimension mismatch: expected {expected}, found {found}")
        self.expected = expected
        self.found = found


class UnreadableFile(DiscoprobeError):
    def __init__(self, path, reason: str):
        super().__init__(f"cannot read {path}: {reason}")
        self.path = path
        self.reason = reason


# --- task synthesis -------------------------------------------------------

class InsufficientDocuments(DiscoprobeError):
    def __init__(self, needed: int, available: int):
        super().__init__(f"need capacity for {needed} instances, only {available} available")
        self.needed = needed
        self.available = available


class InsufficientThreads(InsufficientDocuments):
    pass


class EmptyCategorySet(DiscoprobeError):
    pass


class NoDistractorAvailable(DiscoprobeError):
    pass


class NoAbstract(DiscoprobeError):
    def __init__(self, doc_id: str):
        super().__init__(f"document {doc_id!r} has no abstract section")
        self.doc_id = doc_id


class UnknownSectionNumber(DiscoprobeError):
    def __init__(self, section):
        super().__init__(f"not a WSJ section number: {section!r}")
        self.section = section


class UnaryNode(DiscoprobeError):
    pass


class EmptySpan(DiscoprobeError):
    pass


class UnassignedDocument(DiscoprobeError):
    def __init__(self, doc_id: str):
        super().__init__(f"document {doc_id!r} has no split assignment")
        self.doc_id = doc_id


class MalformedRow(DiscoprobeError):
    def __init__(self, line: int, reason: str = ""):
        super().__init__(f"malformed row at line {line}" + (f": {reason}" if reason else ""))
        self.line = line


# --- numeric kernel -------------------------------------------------------

class ShapeMismatch(DiscoprobeError):
    pass


class EmptySequence(DiscoprobeError):
    pass


class IndexOutOfVocab(DiscoprobeError):
    pass


class LabelOutOfRange(DiscoprobeError):
    pass


class EmptyTarget(DiscoprobeError):
    pass


class NonFiniteLoss(DiscoprobeError):
    pass


# --- training -------------------------------------------------------------

class BothTitlesEmpty(DiscoprobeError):
    pass


# --- evaluation -----------------------------------------------------------

class MissingEmbedding(DiscoprobeError):
    def __init__(self, instance_id: str):
        super().__init__(f"no embedding for instance {instance_id!r}")
        self.instance_id = instance_id


class WrongArity(DiscoprobeError):
    def __init__(self, construction: str, got: int):
        super().__init__(f"construction {construction!r} got {got} vectors")
        self.construction = construction
        self.got = got


class DegenerateLabels(DiscoprobeError):
    pass


class EmptyTestSet(DiscoprobeError):
    pass


class MissingTask(DiscoprobeError):
    def __init__(self, name: str):
        super().__init__(f"no result for task {name!r}")
        self.name = name


# --- configuration --------------------------------------------------------

class ConfigError(DiscoprobeError):
    pass


class UnknownKey(ConfigError):
    def __init__(self, key: str):
        super().__init__(f"unknown config key {key!r}")
        self.key = key


class InvalidValue(ConfigError):
    def __init__(self, key: str, reason: str):
        super().__init__(f"invalid value for {key!r}: {reason}")
        self.key = key
        self.reason = reason


class MissingPath(ConfigError):
    def __init__(self, path):
        super().__init__(f"path does not exist: {path}")
        self.path = path
