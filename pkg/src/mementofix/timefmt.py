"""Datetime conversions between 14-digit timestamps and RFC 1123 strings.

Everything here is UTC; 14-digit timestamps are YYYYMMDDHHMMSS.
"""

from datetime import datetime, timezone
from email.utils import format_datetime, parsedate_to_datetime

TS14_FORMAT = "%Y%m%d%H%M%S"

# Calendar floor for padding short timestamp prefixes: month and day
# default to 01, time-of-day to 00:00:00.
_PAD_TAIL = "0101000000"


def now_utc() -> datetime:
    return datetime.now(timezone.utc).replace(microsecond=0)


def to_ts14(dt: datetime) -> str:
    return dt.astimezone(timezone.utc).strftime(TS14_FORMAT)


def from_ts14(ts: str) -> datetime:
    """Parse a 14-digit timestamp; raises ValueError on bad input."""
    if len(ts) != 14 or not ts.isdigit():
        raise ValueError(f"not a 14-digit timestamp: {ts!r}")
    return datetime.strptime(ts, TS14_FORMAT).replace(tzinfo=timezone.utc)


def pad_ts(prefix: str) -> str:
    """Pad a 4-14 digit timestamp prefix to the earliest instant it denotes.

    "2018" -> "20180101000000", "20181222" -> "20181222000000".
    """
    if not (4 <= len(prefix) <= 14 and prefix.isdigit()):
        raise ValueError(f"not a 4-14 digit timestamp prefix: {prefix!r}")
    return prefix + _PAD_TAIL[len(prefix) - 4:]


def to_rfc1123(dt: datetime) -> str:
    return format_datetime(dt.astimezone(timezone.utc), usegmt=True)


def from_rfc1123(text: str) -> datetime:
    dt = parsedate_to_datetime(text)
    if dt.tzinfo is None:
        dt = dt.replace(tzinfo=timezone.utc)
    return dt.astimezone(timezone.utc)


def ts14_to_rfc1123(ts: str) -> str:
    return to_rfc1123(from_ts14(ts))


def rfc1123_to_ts14(text: str) -> str:
    return to_ts14(from_rfc1123(text))
