from __future__ import annotations

import logging

_RESERVED = set(logging.LogRecord("", 0, "", 0, "", None, None).__dict__) | {"message", "asctime"}


class ContextFormatter(logging.Formatter):
    """Appends ``extra={...}`` fields to the line as key=value pairs."""

    def format(self, record: logging.LogRecord) -> str:
        line = super().format(record)
        context = {k: v for k, v in record.__dict__.items() if k not in _RESERVED}
        if not context:
            return line
        return line + " " + " ".join(f"{k}={v}" for k, v in sorted(context.items()))



def configure_logging(level: str) -> None:
    handler = logging.StreamHandler()
    handler.setFormatter(ContextFormatter("%(asctime)s [%(levelname)s] %(name)s %(message)s"))
    logging.basicConfig(level=level, handlers=[handler])
