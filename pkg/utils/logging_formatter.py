import logging


class Formatter(logging.Formatter):
    """
    Colored console formatter for the lab's log output.
    Verdict lines logged at INFO stay grey; numerical diagnostics (WARNING) show up yellow.
    """
    grey = "\x1b[38;20m"
    yellow = "\x1b[33;20m"
    red = "\x1b[31;20m"
    bold_red = "\x1b[31;1m"
    reset = "\x1b[0m"
    format_string = "%(asctime)s - %(name)s - %(levelname)s - %(message)s (%(filename)s:%(lineno)d)"

    FORMATS = {
        logging.DEBUG: grey + format_string + reset,
        logging.INFO: grey + format_string + reset,
        logging.WARNING: yellow + format_string + reset,
        logging.ERROR: red + format_string + reset,
        logging.CRITICAL: bold_red + format_string + reset
    }

    def __init__(self, colored: bool = True):
        """
        Create the formatter.
        :param colored: whether to wrap records in ANSI colors (off when writing to a file or a pipe)
        """
        super().__init__()
        self.colored = colored

    def format(self, record: logging.LogRecord) -> str:
        if self.colored:
            log_fmt = self.FORMATS.get(record.levelno, self.format_string)
        else:
            log_fmt = self.format_string
        formatter = logging.Formatter(log_fmt)
        return formatter.format(record)


def configure_logging(verbose: bool = False, colored: bool = True) -> logging.Logger:
    """
    Set up the root handler once, the way the entry point expects it.
    :param verbose: DEBUG instead of INFO on the console
    :param colored: use the colored formatter
    :return: the lab's base logger
    """
    from configuration.constants import LOGGING_ROOT

    level = logging.DEBUG if verbose else logging.INFO
    logging.basicConfig(level=level)

    root_logger = logging.getLogger()
    root_logger.setLevel(level)

    ch = logging.StreamHandler()
    ch.setLevel(level)
    ch.setFormatter(Formatter(colored=colored))
    root_logger.handlers = [ch]  # Make sure to not double print

    return logging.getLogger(LOGGING_ROOT)
