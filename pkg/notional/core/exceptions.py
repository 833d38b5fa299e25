import logging

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_UNEXPECTED = 1
EXIT_INPUT = 2
EXIT_SCHEMA = 3
EXIT_MODEL = 4


# Custom Exception Classes
class NotionalError(Exception):
    """Base exception for pipeline errors"""
    def __init__(self, message: str, exit_code: int = EXIT_INPUT):
        self.message = message
        self.exit_code = exit_code
        super().__init__(self.message)

class CorpusFormatError(NotionalError):
    """CoNLL file does not have the expected layout"""
    def __init__(self, message: str = "Malformed CoNLL file"):
        super().__init__(message, EXIT_INPUT)

class MalformedParseError(CorpusFormatError):
    """Parse bits do not form a balanced tree"""
    def __init__(self, line: int, detail: str = "unbalanced parse bits"):
        self.line = line
        super().__init__(f"Malformed parse at line {line}: {detail}")

class MalformedCorefError(CorpusFormatError):
    """Coreference brackets do not match"""
    def __init__(self, entity_id: int, sentence: int, detail: str = "unbalanced brackets"):
        self.entity_id = entity_id
        self.sentence = sentence
        super().__init__(
            f"Malformed coreference for entity {entity_id} in sentence {sentence}: {detail}"
        )

class UnmappedDocumentError(NotionalError):
    """No genre prefix matches the document id"""
    def __init__(self, doc_id: str):
        self.doc_id = doc_id
        super().__init__(f"No genre mapping for document: {doc_id}", EXIT_INPUT)

class SchemaError(NotionalError):
    """Artifact file is missing a column or has a bad value"""
    def __init__(self, column: str, detail: str = "missing column"):
        self.column = column
        super().__init__(f"Schema error in column '{column}': {detail}", EXIT_SCHEMA)

class EncodingMismatchError(NotionalError):
    """Feature vectors do not match the model encoding"""
    def __init__(self, message: str = "Feature encoding does not match model"):
        super().__init__(message, EXIT_MODEL)

class StratificationError(NotionalError):
    """Folds or strata cannot be built"""
    def __init__(self, message: str = "Stratification failed"):
        super().__init__(message, EXIT_INPUT)

class DegenerateTableError(NotionalError):
    """Contingency table has an empty margin"""
    def __init__(self, category: str):
        self.category = category
        super().__init__(f"Zero marginal total for category: {category}", EXIT_INPUT)

class EmptyDatasetError(NotionalError):
    """Nothing to fit or evaluate"""
    def __init__(self, message: str = "Dataset is empty"):
        super().__init__(message, EXIT_INPUT)

class ConfigurationError(NotionalError):
    """Bad option or resource"""
    def __init__(self, message: str = "Invalid configuration"):
        super().__init__(message, EXIT_INPUT)


# Exception Handler
def handle_exception(exc: Exception, command: str) -> int:
    """Log an error raised by a CLI command and return its exit code"""
    if isinstance(exc, NotionalError):
        logger.error(f"{type(exc).__name__}: {exc.message} - Command: {command}")
        return exc.exit_code
    logger.error(f"Unexpected error: {str(exc)} - Command: {command}", exc_info=True)
    return EXIT_UNEXPECTED
