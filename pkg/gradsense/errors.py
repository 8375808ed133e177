"""
Error types and error handling for gradsense
"""
from enum import Enum
from typing import Any, Dict, List, Optional
import logging
import traceback

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_NOT_STRATEGIC = 3
EXIT_USAGE = 64
EXIT_DATA = 65
EXIT_NUMERICAL = 70


class ErrorType(Enum):
    """Types of errors that can occur"""
    DOMAIN_ERROR = "domain_error"
    SENSOR_ERROR = "sensor_error"
    ANALYSIS_ERROR = "analysis_error"
    NUMERICAL_ERROR = "numerical_error"
    DATA_MISMATCH = "data_mismatch"
    CONFIG_ERROR = "config_error"
    SYSTEM_ERROR = "system_error"


class ErrorSeverity(Enum):
    """Error severity levels"""
    LOW = "low"
    MEDIUM = "medium"
    HIGH = "high"
    CRITICAL = "critical"


class GradsenseError(Exception):
    """Root of every error raised by the toolkit"""

    error_type: ErrorType = ErrorType.SYSTEM_ERROR
    exit_code: int = EXIT_NUMERICAL

    def __init__(self, message: str, field_path: Optional[str] = None):
        super().__init__(message)
        self.message = message
        self.field_path = field_path


# Domain and geometry
class DomainError(GradsenseError):
    error_type = ErrorType.DOMAIN_ERROR


class NonPositiveDomain(DomainError):
    pass


class OutOfDomain(DomainError):
    pass


class OutOfRegion(DomainError):
    pass


class InvalidRegion(DomainError):
    pass


# Sensors
class SensorError(GradsenseError):
    error_type = ErrorType.SENSOR_ERROR


class UnsupportedCombination(SensorError):
    pass


class QuadratureUnderflow(SensorError):
    pass


class InvalidSensorGeometry(SensorError):
    pass


class EmptySuite(SensorError):
    pass


# Analysis
class AnalysisError(GradsenseError):
    error_type = ErrorType.ANALYSIS_ERROR


class NonPositiveHorizon(AnalysisError):
    pass


class RadiusTooLarge(AnalysisError):
    pass


class IrrationalUnsupported(AnalysisError):
    pass


# Simulation / reconstruction
class ReconstructionError(GradsenseError):
    error_type = ErrorType.NUMERICAL_ERROR


class SingularSystem(ReconstructionError):
    pass


class QuadratureUnderResolved(ReconstructionError):
    pass


# Data consistency (exit 65)
class DataMismatch(GradsenseError):
    error_type = ErrorType.DATA_MISMATCH
    exit_code = EXIT_DATA


class ModeSetMismatch(DataMismatch):
    pass


class HorizonMismatch(DataMismatch):
    pass


class ChannelMismatch(DataMismatch):
    pass


# Configuration (exit 64)
class ConfigError(GradsenseError):
    error_type = ErrorType.CONFIG_ERROR
    exit_code = EXIT_USAGE


class ParseError(ConfigError):
    pass


class ConfigValidationError(ConfigError):
    pass


class ErrorHandler:
    """Classifies errors, logs them and builds the payload shown to the user"""

    def __init__(self):
        self.error_log: List[Dict[str, Any]] = []
        self.suggestions = {
            ErrorType.CONFIG_ERROR: [
                "Check the field named in 'field_path'",
                "Coordinates given as strings ('1/3') are ratios of the side length",
                "Unknown keys are rejected; compare with docs/examples",
            ],
            ErrorType.DATA_MISMATCH: [
                "Regenerate the output CSV with the same config (T, dt, sensors)",
                "The CSV needs one 't' column plus one column per sensor",
            ],
            ErrorType.DOMAIN_ERROR: [
                "Side lengths must be positive",
                "Points must lie in the closed rectangle [0, a1] x [0, a2]",
            ],
            ErrorType.SENSOR_ERROR: [
                "Dirac distributions are only valid for pointwise and filament sensors",
                "Zone supports must have positive measure inside the domain",
            ],
            ErrorType.ANALYSIS_ERROR: [
                "Check the time horizon and collar radius",
            ],
            ErrorType.NUMERICAL_ERROR: [
                "The suite may be non-strategic; run 'check' first",
                "Use a positive regularization lambda for noisy or weakly observable data",
            ],
        }

    def handle_error(self, error: Exception, context: Optional[Dict[str, Any]] = None) -> Dict[str, Any]:
        """Main error handling function"""
        error_type = self._classify_error(error)
        severity = self._determine_severity(error_type)
        exit_code = error.exit_code if isinstance(error, GradsenseError) else EXIT_NUMERICAL

        error_info = {
            'error_type': error_type.value,
            'severity': severity.value,
            'error_class': type(error).__name__,
            'message': str(error),
            'field_path': getattr(error, 'field_path', None),
            'exit_code': exit_code,
            'context': context or {},
            'traceback': traceback.format_exc() if severity == ErrorSeverity.CRITICAL else None,
        }
        self.error_log.append(error_info)
        logger.error(f"Error handled: {error_type.value} - {type(error).__name__}: {error}")

        return {
            'error_type': error_info['error_type'],
            'severity': error_info['severity'],
            'error_class': error_info['error_class'],
            'message': error_info['message'],
            'field_path': error_info['field_path'],
            'exit_code': exit_code,
            'suggestions': self.suggestions.get(error_type, ["Re-run with GRADSENSE_LOG_LEVEL=DEBUG"]),
        }

    def _classify_error(self, error: Exception) -> ErrorType:
        """Classify the type of error"""
        if isinstance(error, GradsenseError):
            return error.error_type
        if isinstance(error, (ValueError, KeyError)):
            return ErrorType.CONFIG_ERROR
        if isinstance(error, (FloatingPointError, ArithmeticError)):
            return ErrorType.NUMERICAL_ERROR
        return ErrorType.SYSTEM_ERROR

    def _determine_severity(self, error_type: ErrorType) -> ErrorSeverity:
        """Determine error severity"""
        severity_mapping = {
            ErrorType.CONFIG_ERROR: ErrorSeverity.LOW,
            ErrorType.DATA_MISMATCH: ErrorSeverity.LOW,
            ErrorType.DOMAIN_ERROR: ErrorSeverity.LOW,
            ErrorType.SENSOR_ERROR: ErrorSeverity.MEDIUM,
            ErrorType.ANALYSIS_ERROR: ErrorSeverity.MEDIUM,
            ErrorType.NUMERICAL_ERROR: ErrorSeverity.HIGH,
            ErrorType.SYSTEM_ERROR: ErrorSeverity.CRITICAL,
        }
        return severity_mapping.get(error_type, ErrorSeverity.MEDIUM)

    def get_error_statistics(self) -> Dict[str, Any]:
        """Get error statistics for the current process"""
        if not self.error_log:
            return {"total_errors": 0}

        error_counts: Dict[str, int] = {}
        for error in self.error_log:
            error_counts[error['error_type']] = error_counts.get(error['error_type'], 0) + 1

        return {
            'total_errors': len(self.error_log),
            'error_types': error_counts,
            'recent_errors': [
                {k: e[k] for k in ('error_type', 'error_class', 'message')} for e in self.error_log[-5:]
            ],
        }


# Global handler instance
error_handler = ErrorHandler()
