"""Multipurpose electronic card registry.

Each citizen record carries a unique ID that is the IDEA encryption of its
serial number under the registry key. Presenting a unique ID means decrypting
it back to a serial and looking that serial up.

Store file: UTF-8 text, one record per line::

    serial,hex(name),age,facilities_hex,uid_hex,status

The registry key never goes into this file.
"""

from __future__ import annotations

import os
import tempfile
from dataclasses import dataclass, replace
from pathlib import Path

from . import idea

ACTIVE = "active"
REVOKED = "revoked"

VOTING_RIGHT = 0x01

MAX_NAME_BYTES = 64
MAX_AGE = 150


class RegistryError(Exception):
    pass


class InvalidRecordError(RegistryError):
    pass


class UnknownIdError(RegistryError):
    """The unique ID does not decrypt to a serial in the store."""


class RevokedError(RegistryError):
    pass


class StorageError(RegistryError):
    pass


@dataclass(frozen=True)
class CitizenRecord:
    serial: int = 0
    name: str = ""
    age: int = 0
    facilities: int = 0
    status: str = ACTIVE
    unique_id: bytes = bytes(8)

    @property
    def voting_right(self) -> bool:
        return bool(self.facilities & VOTING_RIGHT)

    def to_line(self) -> str:
        return ",".join(
            (
                str(self.serial),
                self.name.encode("utf-8").hex(),
                str(self.age),
                f"{self.facilities:08x}",
                self.unique_id.hex(),
                self.status,
            )
        )

    @classmethod
    def from_line(cls, line: str) -> "CitizenRecord":
        try:
            serial, name_hex, age, fac, uid, status = line.split(",")
            rec = cls(
                int(serial),
                bytes.fromhex(name_hex).decode("utf-8"),
                int(age),
                int(fac, 16),
                status,
                bytes.fromhex(uid),
            )
        except ValueError as exc:
            raise StorageError(f"malformed store line: {line!r}") from exc
        validate_record(rec)
        return rec


def validate_name(name: str) -> None:
    if not isinstance(name, str) or not name.isprintable():
        raise InvalidRecordError("name must be a printable string")
    if len(name.encode("utf-8")) > MAX_NAME_BYTES:
        raise InvalidRecordError(f"name longer than {MAX_NAME_BYTES} bytes")


def validate_age(age: int) -> None:
    if isinstance(age, bool) or not isinstance(age, int) or not 0 <= age <= MAX_AGE:
        raise InvalidRecordError(f"age must be an integer in 0..{MAX_AGE}")


def validate_record(rec: CitizenRecord) -> None:
    validate_name(rec.name)
    validate_age(rec.age)
    if not 0 <= rec.serial < 1 << 64:
        raise InvalidRecordError("serial out of 64-bit range")
    if not 0 <= rec.facilities <= 0xFFFFFFFF:
        raise InvalidRecordError("facilities out of range")
    if rec.status not in (ACTIVE, REVOKED):
        raise InvalidRecordError(f"unknown status {rec.status!r}")
    if len(rec.unique_id) != 8:
        raise InvalidRecordError("unique_id must be 8 bytes")
    if rec.status == REVOKED and rec.facilities:
        raise InvalidRecordError("revoked record cannot hold facilities")


def set_all_defaults(rec: CitizenRecord) -> CitizenRecord:
    return replace(rec, name="", age=0, facilities=0, status=ACTIVE)


@dataclass(frozen=True)
class StatusReport:
    serial: int
    name: str
    age: int
    facilities: int
    status: str
    unique_id: bytes

    @classmethod
    def of(cls, rec: CitizenRecord) -> "StatusReport":
        return cls(rec.serial, rec.name, rec.age, rec.facilities, rec.status, rec.unique_id)

    @property
    def voting_right(self) -> bool:
        return bool(self.facilities & VOTING_RIGHT)


class RegistryStore:
    """Ordered, optionally file-backed collection of citizen records.

    With ``path=None`` the store lives only in memory. Mutations are not
    locked here; callers serialize writers.
    """

    def __init__(self, key: bytes, path: str | os.PathLike | None = None) -> None:
        self.path = Path(path) if path is not None else None
        self._enc = idea.expand_key(key)
        self._dec = idea.invert_key(self._enc)
        self.records: dict[int, CitizenRecord] = {}
        if self.path is not None and self.path.exists():
            self.load()

    @property
    def next_serial(self) -> int:
        return max(self.records, default=0) + 1

    def load(self) -> None:
        assert self.path is not None
        records: dict[int, CitizenRecord] = {}
        try:
            text = self.path.read_text(encoding="utf-8")
        except OSError as exc:
            raise StorageError(f"cannot read {self.path}: {exc}") from exc
        for line in text.splitlines():
            if not line:
                continue
            rec = CitizenRecord.from_line(line)
            if rec.serial in records:
                raise StorageError(f"duplicate serial {rec.serial} in {self.path}")
            records[rec.serial] = rec
        self.records = records

    def dumps(self) -> str:
        return "".join(rec.to_line() + "\n" for rec in self.records.values())

    def save(self) -> None:
        if self.path is None:
            return
        data = self.dumps()
        try:
            fd, tmp = tempfile.mkstemp(dir=self.path.parent, prefix=".mec-")
            with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
                fh.write(data)
            os.replace(tmp, self.path)
        except OSError as exc:
            raise StorageError(f"cannot write {self.path}: {exc}") from exc

    def uid_for(self, serial: int) -> bytes:
        return idea.encrypt_block(idea.Block64.from_int(serial), self._enc).to_bytes()

    def serial_for(self, unique_id: bytes) -> int:
        if len(unique_id) != 8:
            raise UnknownIdError("unique ID must be 8 bytes")
        return idea.decrypt_block(idea.Block64.from_bytes(unique_id), self._dec).to_int()

    def resolve(self, unique_id: bytes) -> CitizenRecord:
        rec = self.records.get(self.serial_for(unique_id))
        if rec is None or rec.unique_id != unique_id:
            raise UnknownIdError("unique ID not recognised")
        return rec

    def _put(self, rec: CitizenRecord) -> CitizenRecord:
        previous = self.records.get(rec.serial)
        self.records[rec.serial] = rec
        try:
            self.save()
        except StorageError:
            if previous is None:
                del self.records[rec.serial]
            else:
                self.records[rec.serial] = previous
            raise
        return rec

    def issue_card(self, name: str, age: int) -> CitizenRecord:
        validate_name(name)
        validate_age(age)
        serial = self.next_serial
        rec = CitizenRecord(serial, name, age, 0, ACTIVE, self.uid_for(serial))
        return self._put(rec)

    def set_voter_flag(self, unique_id: bytes) -> CitizenRecord:
        rec = self.resolve(unique_id)
        if rec.status == REVOKED:
            raise RevokedError(f"record {rec.serial} is revoked")
        if rec.voting_right:
            return rec
        return self._put(replace(rec, facilities=rec.facilities | VOTING_RIGHT))

    def check_overall_status(self, unique_id: bytes) -> StatusReport:
        return StatusReport.of(self.resolve(unique_id))

    def revoke(self, unique_id: bytes) -> CitizenRecord:
        rec = self.resolve(unique_id)
        if rec.status == REVOKED:
            raise RevokedError(f"record {rec.serial} is already revoked")
        return self._put(replace(rec, status=REVOKED, facilities=0))


def issue_card(store: RegistryStore, name: str, age: int) -> CitizenRecord:
    return store.issue_card(name, age)


def set_voter_flag(store: RegistryStore, unique_id: bytes) -> CitizenRecord:
    return store.set_voter_flag(unique_id)


def check_overall_status(store: RegistryStore, unique_id: bytes) -> StatusReport:
    return store.check_overall_status(unique_id)


def revoke(store: RegistryStore, unique_id: bytes) -> CitizenRecord:
    return store.revoke(unique_id)
