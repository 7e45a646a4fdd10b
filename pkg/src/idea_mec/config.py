"""key=value configuration files.

One setting per line, ``#`` starts a comment, blank lines are ignored::

    # GA session-key settings
    password = PASSWORD1
    seed = 42
    lcg_a = 6364136223846793005
    lcg_c = 1442695040888963407
    lcg_m = 18446744073709551616
    population_size = 10
    width = 128
    generations = 10
    locus = lcg          # or a fixed 1-based locus such as 4
    selection = false
    # population = 284,7000,...   fixture first generation
    # coded_array = 5,1,3,5,2,4,2,4   fixture, bypasses evolution
    store = cards.txt
    endpoint = 127.0.0.1:7788
    # key = 000102030405060708090a0b0c0d0e0f   (instead of password)
"""

from __future__ import annotations

from pathlib import Path

KNOWN_KEYS = frozenset(
    {
        "key",
        "password",
        "seed",
        "lcg_a",
        "lcg_c",
        "lcg_m",
        "population_size",
        "population",
        "width",
        "generations",
        "locus",
        "selection",
        "coded_array",
        "store",
        "endpoint",
    }
)


class ConfigError(ValueError):
    pass


def parse_config(text: str, source: str = "<config>") -> dict[str, str]:
    settings: dict[str, str] = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        name, sep, value = line.partition("=")
        name = name.strip().lower().replace("-", "_")
        if not sep or not name:
            raise ConfigError(f"{source}:{lineno}: expected key = value")
        if name not in KNOWN_KEYS:
            raise ConfigError(f"{source}:{lineno}: unknown setting {name!r}")
        if name in settings:
            raise ConfigError(f"{source}:{lineno}: duplicate setting {name!r}")
        settings[name] = value.strip()
    return settings


def load_config(path: str | Path) -> dict[str, str]:
    p = Path(path)
    try:
        text = p.read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read config {p}: {exc}") from exc
    return parse_config(text, str(p))


def parse_bool(value: str) -> bool:
    v = value.strip().lower()
    if v in ("1", "true", "yes", "on"):
        return True
    if v in ("0", "false", "no", "off"):
        return False
    raise ConfigError(f"not a boolean: {value!r}")


def parse_int_list(value: str) -> list[int]:
    try:
        return [int(x) for x in value.replace(" ", "").split(",") if x]
    except ValueError:
        raise ConfigError(f"expected comma-separated integers, got {value!r}") from None
