"""Host implementations of `native` library methods.

Keys are `Class.method/arity`; a hook receives the machine, the receiver
(None for static methods) and the argument list.
"""

from __future__ import annotations

from .values import ARITH, NPE, MjThrow

_H = 1 << 63
_M = (1 << 64) - 1


def wrap(v: int) -> int:
    return ((v + _H) & _M) - _H


def days_from_civil(y: int, m: int, d: int) -> int:
    """Days since 1970-01-01 in the proleptic Gregorian calendar (year 0 exists)."""
    y -= m <= 2
    era = y // 400
    yoe = y - era * 400
    doy = (153 * (m + (-3 if m > 2 else 9)) + 2) // 5 + d - 1
    doe = yoe * 365 + yoe // 4 - yoe // 100 + doy
    return era * 146097 + doe - 719468


def civil_from_days(z: int) -> tuple[int, int, int]:
    z += 719468
    era = z // 146097
    doe = z - era * 146097
    yoe = (doe - doe // 1460 + doe // 36524 - doe // 146096) // 365
    doy = doe - (365 * yoe + yoe // 4 - yoe // 100)
    mp = (5 * doy + 2) // 153
    d = doy - (153 * mp + 2) // 5 + 1
    m = mp + 3 if mp < 10 else mp - 9
    return yoe + era * 400 + (m <= 2), m, d


def _floor_div(m, this, args):
    a, b = args
    if b == 0:
        raise MjThrow(ARITH)
    return wrap(a // b)


def _floor_mod(m, this, args):
    a, b = args
    if b == 0:
        raise MjThrow(ARITH)
    return a % b


def _str(v) -> str:
    if v is None:
        raise MjThrow(NPE)
    return v


def _char_at(m, this, args):
    s, i = _str(args[0]), args[1]
    if not 0 <= i < len(s):
        raise MjThrow("IndexOutOfBoundsException")
    return ord(s[i])


def _substring(m, this, args):
    s, a, b = _str(args[0]), args[1], args[2]
    if not 0 <= a <= b <= len(s):
        raise MjThrow("IndexOutOfBoundsException")
    return s[a:b]


def _from_char(m, this, args):
    c = args[0]
    if not 0 <= c <= 0x10FFFF:
        raise MjThrow("IllegalArgumentException")
    return chr(c)


def _url_decode(m, this, args):
    s = _str(args[0])
    out = bytearray()
    i = 0
    while i < len(s):
        ch = s[i]
        if ch == "+":
            out += b" "
            i += 1
        elif ch == "%":
            h = s[i + 1 : i + 3]
            if len(h) < 2 or any(c not in "0123456789abcdefABCDEF" for c in h):
                raise MjThrow("IllegalArgumentException")
            out.append(int(h, 16))
            i += 3
        else:
            out += ch.encode("utf-8")
            i += 1
    return out.decode("utf-8", errors="replace")


DEFAULT_NATIVES = {
    "Math.floorDiv/2": _floor_div,
    "Math.floorMod/2": _floor_mod,
    "CalendarMath.daysFromCivil/3": lambda m, this, a: wrap(days_from_civil(a[0], a[1], a[2])),
    "CalendarMath.civilYear/1": lambda m, this, a: wrap(civil_from_days(a[0])[0]),
    "CalendarMath.civilMonth/1": lambda m, this, a: civil_from_days(a[0])[1],
    "CalendarMath.civilDay/1": lambda m, this, a: civil_from_days(a[0])[2],
    "Str.length/1": lambda m, this, a: len(_str(a[0])),
    "Str.charAt/2": _char_at,
    "Str.substring/3": _substring,
    "Str.equals/2": lambda m, this, a: _str(a[0]) == a[1],
    "Str.fromChar/1": _from_char,
    "Str.urlDecode/1": _url_decode,
}
