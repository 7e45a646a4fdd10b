"""Command-line interface.

Exit codes: 0 success, 2 usage error, 3 crypto/key-generation failure,
4 registry error, 5 transport error.
"""

from __future__ import annotations

import argparse
import os
import secrets
import string
import sys
from dataclasses import dataclass
from typing import Callable, Sequence, TextIO

from . import cfb, idea, keygen, net
from .config import ConfigError, load_config, parse_bool, parse_int_list
from .registry import MAX_AGE, RegistryError, RegistryStore, StatusReport, validate_name

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_CRYPTO = 3
EXIT_REGISTRY = 4
EXIT_TRANSPORT = 5

KEY_ENV = "MEC_KEY"
DEFAULT_ENDPOINT = "127.0.0.1:7788"


class UsageError(Exception):
    pass


class CryptoFailure(Exception):
    pass


def parse_hex(value: str, nbytes: int, what: str) -> bytes:
    if len(value) != 2 * nbytes:
        raise UsageError(f"{what} must be {2 * nbytes} hex characters, got {len(value)}")
    try:
        return bytes.fromhex(value)
    except ValueError:
        raise UsageError(f"{what} is not valid hex: {value!r}") from None


@dataclass
class CliConfig:
    """Flags merged over config-file values (flags win)."""

    settings: dict[str, str]
    flag_key: str | None = None
    flag_password: str | None = None

    @classmethod
    def from_args(cls, args: argparse.Namespace) -> "CliConfig":
        settings: dict[str, str] = {}
        if getattr(args, "config", None):
            try:
                settings = load_config(args.config)
            except ConfigError as exc:
                raise UsageError(str(exc)) from None
        overrides = {
            "seed": args.seed,
            "lcg_a": args.lcg_a,
            "lcg_c": args.lcg_c,
            "lcg_m": args.lcg_m,
            "population_size": args.pop_size,
            "width": args.width,
            "generations": args.generations,
            "locus": args.locus,
            "coded_array": args.coded_array,
            "population": args.population,
            "store": getattr(args, "store", None),
            "endpoint": getattr(args, "endpoint", None),
        }
        if args.selection:
            overrides["selection"] = "true"
        settings_flags = {k: str(v) for k, v in overrides.items() if v is not None}
        return cls({**settings, **settings_flags}, args.key, args.password)

    def get(self, name: str, default: str | None = None) -> str | None:
        return self.settings.get(name, default)

    def _int(self, name: str, default: int) -> int:
        raw = self.get(name)
        if raw is None:
            return default
        try:
            return int(raw, 0)
        except ValueError:
            raise UsageError(f"{name} must be an integer, got {raw!r}") from None

    def ga_settings(self, *, random_seed: bool = False) -> keygen.GaSettings:
        seed_raw = self.get("seed")
        if seed_raw is None:
            if not random_seed:
                raise UsageError("password-derived keys need --seed (or seed= in the config)")
            seed = secrets.randbits(64)
            print(f"using random seed {seed}", file=sys.stderr)
        else:
            seed = self._int("seed", 0)
        try:
            params = keygen.LcgParams(
                self._int("lcg_a", keygen.DEFAULT_A),
                self._int("lcg_c", keygen.DEFAULT_C),
                self._int("lcg_m", keygen.DEFAULT_M),
                seed,
            )
        except keygen.KeygenError as exc:
            raise UsageError(str(exc)) from None
        locus_raw = self.get("locus", keygen.LCG_LOCUS)
        locus: keygen.LocusPolicy = keygen.LCG_LOCUS
        if locus_raw != keygen.LCG_LOCUS:
            try:
                locus = int(locus_raw)
            except ValueError:
                raise UsageError(f"locus must be 'lcg' or an integer, got {locus_raw!r}") from None
        initial = None
        if self.get("population"):
            try:
                initial = parse_int_list(self.get("population"))
            except ConfigError as exc:
                raise UsageError(str(exc)) from None
        try:
            selection = parse_bool(self.get("selection", "false"))
        except ConfigError as exc:
            raise UsageError(str(exc)) from None
        return keygen.GaSettings(
            params=params,
            population=len(initial) if initial else self._int("population_size", keygen.DEFAULT_POPULATION),
            width=self._int("width", keygen.DEFAULT_WIDTH),
            generations=self._int("generations", keygen.DEFAULT_GENERATIONS),
            locus_policy=locus,
            selection=selection,
            initial=initial,
        )

    def resolve_key(self, *, random_seed: bool = False, required: bool = True) -> bytes | None:
        """Return the one configured key, deriving it from a password if that is the source."""
        sources = [
            ("--key", self.flag_key, "hex"),
            ("--password", self.flag_password, "password"),
            ("config key", self.get("key"), "hex"),
            ("config password", self.get("password"), "password"),
        ]
        given = [s for s in sources if s[1] is not None]
        if len(given) > 1:
            names = ", ".join(s[0] for s in given)
            raise UsageError(f"more than one key source given ({names}); pick one")
        if not given:
            env = os.environ.get(KEY_ENV)
            if env is not None:
                given = [(KEY_ENV, env, "hex")]
        if not given:
            if required:
                raise UsageError(f"no key: use --key, --password, a config file or ${KEY_ENV}")
            return None
        _, value, kind = given[0]
        if kind == "hex":
            return parse_hex(value.strip().lower(), idea.KEY_BYTES, "key")
        return self.derive_key(value, random_seed=random_seed)

    def derive_key(self, password: str, *, random_seed: bool = False) -> bytes:
        try:
            if self.get("coded_array"):
                return keygen.key_from_coded(password, parse_int_list(self.get("coded_array")))
            return keygen.session_key(password, self.ga_settings(random_seed=random_seed))
        except (keygen.KeygenError, ConfigError) as exc:
            raise CryptoFailure(str(exc)) from None


def _read_input(path: str) -> bytes:
    if path == "-":
        return sys.stdin.buffer.read()
    try:
        with open(path, "rb") as fh:
            return fh.read()
    except OSError as exc:
        raise UsageError(f"cannot read {path}: {exc}") from None


def _write_output(path: str, data: bytes) -> None:
    if path == "-":
        sys.stdout.buffer.write(data)
        sys.stdout.buffer.flush()
        return
    try:
        with open(path, "wb") as fh:
            fh.write(data)
    except OSError as exc:
        raise UsageError(f"cannot write {path}: {exc}") from None


def format_report(r: StatusReport) -> str:
    facilities = "voting right" if r.voting_right else "none"
    return "\n".join(
        (
            f"Unique ID  : {r.unique_id.hex()}",
            f"Serial     : {r.serial}",
            f"Name       : {r.name}",
            f"Age        : {r.age}",
            f"Facilities : {facilities} ({r.facilities:08x})",
            f"Status     : {r.status}",
        )
    )


def cmd_keygen(args: argparse.Namespace, cfg: CliConfig) -> int:
    password = cfg.flag_password if cfg.flag_password is not None else cfg.get("password")
    if password is None:
        raise UsageError("keygen needs --password (or password= in the config)")
    print(cfg.derive_key(password, random_seed=True).hex())
    return EXIT_OK


def _crypt(args: argparse.Namespace, cfg: CliConfig, encrypt: bool) -> int:
    key = cfg.resolve_key()
    if (args.block is None) == (args.input is None):
        raise UsageError("give exactly one of --block HEX or --in PATH")
    if args.block is not None:
        block = parse_hex(args.block.lower(), idea.BLOCK_BYTES, "block")
        enc = idea.expand_key(key)
        out = idea.encrypt_bytes(block, enc) if encrypt else idea.decrypt_bytes(block, idea.invert_key(enc))
        print(out.hex())
        return EXIT_OK
    data = _read_input(args.input)
    if encrypt:
        iv = cfb.RandContext(key, os.urandom(cfb.IV_BYTES)).read(cfb.IV_BYTES)
        ctx = cfb.cfb_init(key, iv)
        result = iv + ctx.encrypt(data)
    else:
        if len(data) < cfb.IV_BYTES:
            raise CryptoFailure("stream input shorter than its 8-byte IV")
        ctx = cfb.cfb_init(key, data[: cfb.IV_BYTES])
        result = ctx.decrypt(data[cfb.IV_BYTES :])
    ctx.destroy()
    _write_output(args.output, result)
    return EXIT_OK


def cmd_encrypt(args: argparse.Namespace, cfg: CliConfig) -> int:
    return _crypt(args, cfg, True)


def cmd_decrypt(args: argparse.Namespace, cfg: CliConfig) -> int:
    return _crypt(args, cfg, False)


def _uid(args: argparse.Namespace) -> bytes:
    if args.uid is None:
        raise UsageError(f"{args.action} needs --uid")
    return parse_hex(args.uid.lower(), 8, "unique ID")


def cmd_card(args: argparse.Namespace, cfg: CliConfig) -> int:
    key = cfg.resolve_key()
    path = cfg.get("store")
    if path is None:
        raise UsageError("card commands need --store (or store= in the config)")
    store = RegistryStore(key, path)
    if args.action == "issue":
        if args.name is None or args.age is None:
            raise UsageError("issue needs --name and --age")
        report = StatusReport.of(store.issue_card(args.name, args.age))
    elif args.action == "grant":
        report = StatusReport.of(store.set_voter_flag(_uid(args)))
        print("Voting right granted.")
    elif args.action == "check":
        report = store.check_overall_status(_uid(args))
    else:
        report = StatusReport.of(store.revoke(_uid(args)))
        print("Services stopped.")
    print(format_report(report))
    return EXIT_OK


def cmd_serve(args: argparse.Namespace, cfg: CliConfig) -> int:
    key = cfg.resolve_key()
    path = cfg.get("store")
    if path is None:
        raise UsageError("serve needs --store (or store= in the config)")
    store = RegistryStore(key, path)
    endpoint = cfg.get("endpoint", DEFAULT_ENDPOINT)
    try:
        net.serve(store, key, endpoint)
    except KeyboardInterrupt:
        pass
    return EXIT_OK


def cmd_send(args: argparse.Namespace, cfg: CliConfig) -> int:
    key = cfg.resolve_key()
    client = net.Client(cfg.get("endpoint", DEFAULT_ENDPOINT), key, args.timeout)
    if args.action == "issue":
        if args.name is None or args.age is None:
            raise UsageError("issue needs --name and --age")
        report = client.issue(args.name, args.age)
    elif args.action == "grant":
        report = client.grant(_uid(args))
        print("Voting right granted.")
    elif args.action == "check":
        report = client.check(_uid(args))
    else:
        report = client.revoke(_uid(args))
        print("Services stopped.")
    print(format_report(report))
    return EXIT_OK


def _prompt(stdin: TextIO, stdout: TextIO, text: str, convert: Callable[[str], object]):
    while True:
        stdout.write(text)
        stdout.flush()
        line = stdin.readline()
        if not line:
            raise UsageError("input ended before the demo finished")
        try:
            return convert(line.strip())
        except ValueError as exc:
            stdout.write(f"invalid input: {exc}\n")


def _byte(text: str) -> int:
    v = int(text)
    if not 0 <= v <= 255:
        raise ValueError(f"{v} is outside 0-255")
    return v


def _row(values: Sequence[int]) -> str:
    return "  ".join(f"{v:<4}" for v in values).rstrip()


def run_demo(key: bytes, stdin: TextIO, stdout: TextIO) -> bytes:
    """Interactive card issue plus one block encrypt/decrypt. Returns the ciphertext."""
    store = RegistryStore(key)
    stdout.write("Enter all the necessary fields one by one ---\n")

    def _name(text: str) -> str:
        try:
            validate_name(text)
        except RegistryError as exc:
            raise ValueError(str(exc)) from None
        return text

    def _age(text: str) -> int:
        v = int(text)
        if not 0 <= v <= MAX_AGE:
            raise ValueError(f"{v} is outside 0-{MAX_AGE}")
        return v

    name = _prompt(stdin, stdout, "Enter name : ", _name)
    age = _prompt(stdin, stdout, "Enter age : ", _age)
    card = store.issue_card(name, age)
    store.set_voter_flag(card.unique_id)
    stdout.write("Voting right granted.\n")
    stdout.write("Enter message:\n")
    msg = bytes(
        _prompt(stdin, stdout, f"enter the decimal equivalent of 8 bits (0-255) no {i} : ", _byte)
        for i in range(1, 9)
    )
    enc = idea.expand_key(key)
    ct = idea.encrypt_bytes(msg, enc)
    pt = idea.decrypt_bytes(ct, idea.invert_key(enc))
    if pt != msg:
        raise CryptoFailure("decryption did not restore the message")
    report = store.check_overall_status(card.unique_id)
    stdout.write(f"\norig message is {_row(msg)}\n")
    stdout.write(f"\nenc. message is {_row(ct)}\n")
    stdout.write(f"\ndec. message is {_row(pt)}\n")
    stdout.write(f"\nName : {report.name}\nAge : {report.age}\n")
    return ct


def cmd_demo(args: argparse.Namespace, cfg: CliConfig) -> int:
    key = cfg.resolve_key(random_seed=True, required=False)
    if key is None:
        alphabet = string.ascii_letters + string.digits
        password = "".join(secrets.choice(alphabet) for _ in range(keygen.MIN_PASSWORD))
        key = cfg.derive_key(password, random_seed=True)
    run_demo(key, sys.stdin, sys.stdout)
    return EXIT_OK


def _ga_options() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(add_help=False)
    g = p.add_argument_group("key source (exactly one; falls back to $" + KEY_ENV + ")")
    g.add_argument("--key", help="128-bit key as 32 hex characters")
    g.add_argument("--password", help="derive the key from this password (min 8 printable ASCII chars)")
    g.add_argument("--config", help="key=value config file (see README for the format)")
    ga = p.add_argument_group("genetic key generation")
    ga.add_argument("--seed", type=int, help="LCG seed, the first chromosome's source")
    ga.add_argument("--lcg-a", type=int, help="LCG multiplier")
    ga.add_argument("--lcg-c", type=int, help="LCG increment")
    ga.add_argument("--lcg-m", type=int, help="LCG modulus")
    ga.add_argument("--pop-size", type=int, help="chromosomes per generation (default 10)")
    ga.add_argument("--width", type=int, help="chromosome width in bits (default 128)")
    ga.add_argument("--generations", type=int, help="number of generations (default 10)")
    ga.add_argument("--locus", help="'lcg' (default) or a fixed 1-based crossover/mutation locus")
    ga.add_argument("--selection", action="store_true", help="keep the fittest chromosomes each generation")
    ga.add_argument("--coded-array", help="fixture: comma-separated digits, bypasses evolution")
    ga.add_argument("--population", help="fixture: comma-separated first-generation chromosomes")
    return p


def _card_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("action", choices=("issue", "grant", "check", "revoke"))
    p.add_argument("--name")
    p.add_argument("--age", type=int)
    p.add_argument("--uid", help="unique ID as 16 hex characters")


def build_parser() -> argparse.ArgumentParser:
    common = _ga_options()
    parser = argparse.ArgumentParser(
        prog="idea-mec",
        description="IDEA with GA session keys, citizen card registry and G2C exchange.",
        epilog=f"Exit codes: 0 ok, 2 usage, 3 crypto failure, 4 registry error, 5 transport error. "
        f"Key from ${KEY_ENV} (32 hex chars) when no other source is given.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("keygen", parents=[common], help="print a GA-derived 128-bit key as hex")
    p.set_defaults(func=cmd_keygen)

    for name, func, verb in (("encrypt", cmd_encrypt, "encrypt"), ("decrypt", cmd_decrypt, "decrypt")):
        p = sub.add_parser(name, parents=[common], help=f"{verb} one block or a stream")
        p.add_argument("--block", help="one 64-bit block as 16 hex characters")
        p.add_argument("--in", dest="input", help="stream mode input file ('-' for stdin)")
        p.add_argument("--out", dest="output", default="-", help="stream mode output file (default stdout)")
        p.set_defaults(func=func)

    p = sub.add_parser("card", parents=[common], help="operate on a local card store")
    _card_args(p)
    p.add_argument("--store", help="store file path")
    p.set_defaults(func=cmd_card)

    p = sub.add_parser("serve", parents=[common], help="run the government-side server")
    p.add_argument("--store", help="store file path")
    p.add_argument("--endpoint", help=f"host:port to listen on (default {DEFAULT_ENDPOINT})")
    p.set_defaults(func=cmd_serve)

    p = sub.add_parser("send", parents=[common], help="send one command to a server")
    _card_args(p)
    p.add_argument("--endpoint", help=f"server host:port (default {DEFAULT_ENDPOINT})")
    p.add_argument("--timeout", type=float, default=10.0)
    p.set_defaults(func=cmd_send)

    p = sub.add_parser("demo", parents=[common], help="interactive card + block encryption demo")
    p.set_defaults(func=cmd_demo)
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = CliConfig.from_args(args)
        return args.func(args, cfg)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (CryptoFailure, keygen.KeygenError) as exc:
        print(f"crypto failure: {exc}", file=sys.stderr)
        return EXIT_CRYPTO
    except RegistryError as exc:
        print(f"registry error: {exc}", file=sys.stderr)
        return EXIT_REGISTRY
    except net.RemoteError as exc:
        print(f"server error: {exc}", file=sys.stderr)
        return EXIT_REGISTRY
    except (net.ProtocolError, OSError) as exc:
        print(f"transport error: {exc}", file=sys.stderr)
        return EXIT_TRANSPORT


if __name__ == "__main__":
    sys.exit(main())
