"""Protocol messages exchanged between agents and the airspace manager."""

from __future__ import annotations

from dataclasses import dataclass

from .volumes import OperationVolume

MANAGER = "am"


@dataclass(frozen=True)
class Request:
    sender: int
    ov: OperationVolume


@dataclass(frozen=True)
class Reply:
    to: int
    ov: OperationVolume


@dataclass(frozen=True)
class Release:
    sender: int
    ov: OperationVolume


@dataclass(frozen=True)
class Violate:
    sender: int


Message = Request | Reply | Release | Violate
