import logging
import os

# Support for colored logging: https://stackoverflow.com/questions/384076/how-can-i-color-python-logging-output
BLACK, RED, GREEN, YELLOW, BLUE, MAGENTA, CYAN, WHITE = range(8)

# The background is set with 40 plus the number of the color, and the foreground with 30

# These are the sequences need to get colored ouput
RESET_SEQ = "\033[0m"
COLOR_SEQ = "\033[1;%dm"
BOLD_SEQ = "\033[1m"

USE_COLOR = os.environ.get("MCSE_LOG_COLOR", "1") != "0"
LOG_LEVEL = os.environ.get("MCSE_LOG_LEVEL", "WARNING").upper()


def formatter_message(message, use_color=True):
    if use_color:
        message = message.replace("$RESET", RESET_SEQ).replace("$BOLD", BOLD_SEQ)
    else:
        message = message.replace("$RESET", "").replace("$BOLD", "")
    return message


COLORS = {"WARNING": YELLOW, "INFO": GREEN, "DEBUG": BLUE, "CRITICAL": MAGENTA, "ERROR": RED}


class ColoredFormatter(logging.Formatter):
    def __init__(self, msg, date_msg, use_color=True):
        logging.Formatter.__init__(self, msg, date_msg)
        self.use_color = use_color

    def format(self, record):
        levelname = record.levelname
        if self.use_color and levelname in COLORS:
            # Copy so that other handlers of the same record see the plain level name.
            record = logging.makeLogRecord(record.__dict__)
            record.levelname = COLOR_SEQ % (30 + COLORS[levelname]) + levelname + RESET_SEQ
            if levelname == "ERROR":
                record.msg = COLOR_SEQ % (30 + COLORS[levelname]) + str(record.msg) + RESET_SEQ
        return logging.Formatter.format(self, record)


GRAY_SEQ = COLOR_SEQ % (30 + BLACK) if USE_COLOR else ""
FORMAT = formatter_message(
    f"[$BOLD%(name)s$RESET|%(levelname)s] {GRAY_SEQ}%(asctime)s.%(msecs)03d"
    f"{RESET_SEQ if USE_COLOR else ''}: %(message)s",
    use_color=USE_COLOR,
)

handler = logging.StreamHandler()
handler.setFormatter(ColoredFormatter(FORMAT, "%Y-%m-%d %H:%M:%S", use_color=USE_COLOR))

logger = logging.getLogger("Mcse")
logger.setLevel(getattr(logging, LOG_LEVEL, logging.WARNING))
logger.addHandler(handler)
logger.propagate = False


def set_verbosity(verbosity: int) -> None:
    """Raise the package log level for command-line use.

    Args:
        verbosity: 0 keeps the configured level, 1 selects INFO, 2 or more selects DEBUG.
    """
    if verbosity >= 2:
        logger.setLevel(logging.DEBUG)
    elif verbosity == 1:
        logger.setLevel(logging.INFO)
