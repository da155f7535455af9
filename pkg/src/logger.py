import logging
from logging.handlers import RotatingFileHandler
import sentry_sdk
from .config import settings

def setup_logging():
    """Configures Sentry and Local File Logging."""

    # 1. Initialize Sentry (batch runs only report errors, no tracing)
    if settings.SENTRY_DSN and settings.SENTRY_DSN.startswith("http"):
        sentry_sdk.init(
            dsn=settings.SENTRY_DSN,
            release=f"{settings.APP_NAME}@{settings.APP_VERSION}",
            send_default_pii=False
        )

    # 2. Define Format
    log_format = "%(asctime)s - %(name)s - %(levelname)s - %(message)s"
    formatter = logging.Formatter(log_format)

    # 3. Root Logger Configuration
    logger = logging.getLogger("trajkit")
    logger.setLevel(logging.DEBUG if settings.DEBUG else settings.TRAJKIT_LOG_LEVEL.upper())

    # Avoid duplicate logs if setup is called twice
    if logger.handlers:
        return logger

    # 4. Local File Handler (trajkit.log)
    if settings.TRAJKIT_LOG_FILE:
        file_handler = RotatingFileHandler(
            settings.TRAJKIT_LOG_FILE,
            maxBytes=5*1024*1024,
            backupCount=3
        )
        file_handler.setFormatter(formatter)
        logger.addHandler(file_handler)

    # 5. Stream Handler (Console)
    stream_handler = logging.StreamHandler()
    stream_handler.setFormatter(formatter)
    logger.addHandler(stream_handler)

    return logger

# Create the logger instance to be imported elsewhere
logger = setup_logging()
