"""Package exceptions. Every exception carries a human readable
message, tool exceptions additionally carry the error kind reported
in a ToolResult."""

__all__ = ['ToolclException',
           'ConfigException',
           'DatasetException',
           'TemplateException',
           'TokenizerException',
           'PackingException',
           'ModelException',
           'OptimizerException',
           'TrainingException',
           'MetricsException',
           'ReportException',
           'ToolException',
           'ToolParseException',
           'UnknownToolException',
           'ToolArityException',
           'ToolDomainException',
           'ToolProtocolException']


class ToolclException(Exception):
    def __init__(self, message):
        super(ToolclException, self).__init__(message)
        self.message = message


class ConfigException(ToolclException):
    pass


class DatasetException(ToolclException):
    pass


class TemplateException(ToolclException):
    pass


class TokenizerException(ToolclException):
    def __init__(self, message, offset=None):
        super(TokenizerException, self).__init__(message)
        self.offset = offset


class PackingException(ToolclException):
    pass


class ModelException(ToolclException):
    pass


class OptimizerException(ToolclException):
    def __init__(self, message, tensor=None):
        super(OptimizerException, self).__init__(message)
        self.tensor = tensor


class TrainingException(ToolclException):
    pass


class MetricsException(ToolclException):
    pass


class ReportException(ToolclException):
    pass


class ToolException(ToolclException):
    kind = None


class ToolParseException(ToolException):
    kind = 'ParseError'

    def __init__(self, message, offset=0):
        super(ToolParseException, self).__init__(
            '{} (offset {})'.format(message, offset))
        self.offset = offset


class UnknownToolException(ToolException):
    kind = 'UnknownTool'


class ToolArityException(ToolException):
    kind = 'ArityError'


class ToolDomainException(ToolException):
    kind = 'DomainError'


class ToolProtocolException(ToolException):
    kind = 'ProtocolError'
