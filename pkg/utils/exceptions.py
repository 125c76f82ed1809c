"""
Custom exceptions for the fairness remediation engine
"""


class FairnessException(Exception):
    """Base exception for the remediation engine"""
    pass


class ConfigurationException(FairnessException):
    """Exception for invalid configuration values or shape mismatches"""
    pass


class SchemaException(ConfigurationException):
    """Exception when an input file does not match its column schema"""
    pass


class DataValidationException(FairnessException):
    """Exception for data validation errors"""
    pass


class UnremediableStreamException(FairnessException):
    """Exception when a required side stream has no qualifying examples"""
    pass


class EmptySampleSetException(FairnessException):
    """Signals an MMD evaluation on an empty sample set"""
    pass


class TrainingDivergedException(FairnessException):
    """Exception for non-finite losses or gradients during training"""
    pass


class CalibrationException(FairnessException):
    """Exception when thresholds cannot be calibrated"""
    pass


class UndefinedConditionException(FairnessException):
    """Exception when a conditional probability conditions on a null event"""
    pass


class VerificationFailedException(FairnessException):
    """Exception when a verification property does not hold"""
    pass


class ReportStorageException(FairnessException):
    """Exception for report writing failures"""
    pass
