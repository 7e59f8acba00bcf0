from contextvars import ContextVar
from datetime import datetime, timezone
import json
import logging
from logging.handlers import RotatingFileHandler
from typing import Any
import uuid

from .config import Settings

UTC = timezone.utc

try:
    # Optional dependency; enabled only if installed and LOKI_URL is set
    import logging_loki  # type: ignore
except Exception:  # pragma: no cover - optional import
    logging_loki = None  # type: ignore


# Context variable populated by the CLI for every invocation
RUN_ID_CTX: ContextVar[str | None] = ContextVar("run_id", default=None)

PLAIN_FORMAT = "%(asctime)s - %(name)s - %(levelname)s - %(message)s"


def _iso_utc_now() -> str:
    return datetime.now(UTC).isoformat()


def new_run_id() -> str:
    """Generate a run id and bind it to the current context."""
    run_id = uuid.uuid4().hex[:12]
    RUN_ID_CTX.set(run_id)
    return run_id


class JsonFormatter(logging.Formatter):
    def format(self, record: logging.LogRecord) -> str:  # noqa: D401
        payload: dict[str, Any] = {
            "ts": _iso_utc_now(),
            "level": record.levelname,
            "logger": record.name,
            "msg": record.getMessage(),
            "module": record.module,
            "func": record.funcName,
            "line": record.lineno,
        }

        if getattr(record, "run_id", None):
            payload["run_id"] = record.run_id
        if getattr(record, "command", None):
            payload["command"] = record.command
        if record.exc_info:
            payload["exc_info"] = self.formatException(record.exc_info)

        return json.dumps(payload, ensure_ascii=False)


class RunIdFilter(logging.Filter):
    """Injects run_id into log records when present in the context."""

    def filter(self, record: logging.LogRecord) -> bool:  # noqa: D401
        if not hasattr(record, "run_id") or record.run_id is None:
            record.run_id = RUN_ID_CTX.get()  # type: ignore[attr-defined]
        return True


def _loki_handler(settings: Settings, formatter: logging.Formatter, run_filter: logging.Filter) -> logging.Handler:
    tags = {
        "service": settings.APP_NAME,
        "env": settings.ENVIRONMENT.value,
        "version": settings.APP_VERSION or "",
    }
    auth = None
    if settings.LOKI_USERNAME:
        password = settings.LOKI_PASSWORD.get_secret_value() if settings.LOKI_PASSWORD else ""
        auth = (settings.LOKI_USERNAME, password)

    common_kwargs: dict[str, Any] = {"url": settings.LOKI_URL, "version": "1", "tags": tags, "auth": auth}
    try:
        if settings.LOKI_TENANT_ID:
            handler = logging_loki.LokiHandler(tenant_id=settings.LOKI_TENANT_ID, **common_kwargs)  # type: ignore
        else:
            handler = logging_loki.LokiHandler(**common_kwargs)  # type: ignore
    except TypeError:
        # Older python-logging-loki versions lack tenant_id
        handler = logging_loki.LokiHandler(**common_kwargs)  # type: ignore
        logging.getLogger(__name__).info("LOKI_TENANT_ID ignored: installed python-logging-loki lacks tenant_id")

    handler.setFormatter(formatter)
    handler.addFilter(run_filter)
    return handler


def setup_logging(settings: Settings, level: str | None = None) -> None:
    """Configure root logging for JSON (or plain) stderr output and optional sinks.

    Controlled by settings:
    - LOG_LEVEL (default: INFO), overridable by ``level``
    - LOG_FORMAT ("json" or "plain")
    - LOG_FILE (if set, add a rotating file handler)
    - LOKI_URL (if set and python-logging-loki is installed, add a Loki handler)
    """
    root = logging.getLogger()
    root.setLevel((level or settings.LOG_LEVEL).upper())
    # Avoid duplicate handlers when invoked repeatedly (tests, nested CLI calls)
    if getattr(root, "_epibif_logging_configured", False):  # type: ignore[attr-defined]
        return

    formatter: logging.Formatter = (
        JsonFormatter() if settings.LOG_FORMAT.lower() == "json" else logging.Formatter(PLAIN_FORMAT)
    )
    run_filter = RunIdFilter()

    console = logging.StreamHandler()
    console.setFormatter(formatter)
    console.addFilter(run_filter)
    root.addHandler(console)

    if settings.LOG_FILE is not None:
        settings.LOG_FILE.parent.mkdir(parents=True, exist_ok=True)
        file_handler = RotatingFileHandler(
            settings.LOG_FILE,
            maxBytes=settings.LOG_FILE_MAX_BYTES,
            backupCount=settings.LOG_FILE_BACKUP_COUNT,
        )
        file_handler.setFormatter(formatter)
        file_handler.addFilter(run_filter)
        root.addHandler(file_handler)

    if settings.LOKI_URL and logging_loki is not None:
        try:
            root.addHandler(_loki_handler(settings, formatter, run_filter))
        except Exception:  # pragma: no cover - never break a run over a log sink
            logging.getLogger(__name__).warning("Failed to initialize Loki logging handler", exc_info=True)

    root._epibif_logging_configured = True  # type: ignore[attr-defined]
