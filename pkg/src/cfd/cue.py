"""Common Use Enumeration registry: hierarchy, identifiers, metadata, versions.

Entries form a forest (multiple roots, no cycles); every mutation appends a
full snapshot version, so any historical state stays retrievable verbatim.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field, replace
from datetime import datetime

from . import canonical
from .errors import (
    CycleDetected,
    EmptyName,
    MalformedDocument,
    SchemaViolation,
    UnknownEntry,
    UnknownParent,
    UnknownSubtreeRoot,
)

_CUE_ID_RE = re.compile(r"^CUE-(\d{3,})$")


def cue_sequence(cue_id: str) -> int:
    match = _CUE_ID_RE.match(cue_id)
    if not match:
        raise SchemaViolation(f"bad CUE id {cue_id!r}")
    return int(match.group(1))


def format_cue_id(sequence: int) -> str:
    return f"CUE-{sequence:03d}"


@dataclass(frozen=True)
class CueMetadata:
    model_types: tuple[str, ...] = ()
    risks: tuple[str, ...] = ()
    implementations: tuple[str, ...] = ()
    related_cues: tuple[str, ...] = ()
    related_cwes: tuple[str, ...] = ()  # stored as opaque strings


@dataclass(frozen=True)
class CueVersion:
    version_number: int
    snapshot: dict  # full entry content, canonical document form
    changed_at: datetime
    change_note: str


@dataclass(frozen=True)
class CueEntry:
    cue_id: str
    name: str
    description: str = ""
    parent: str | None = None
    metadata: CueMetadata = field(default_factory=CueMetadata)
    versions: tuple[CueVersion, ...] = ()
    linked_cards: tuple[str, ...] = ()


@dataclass(frozen=True)
class CueChanges:
    name: str | None = None
    description: str | None = None
    parent: str | None = None
    reparent: bool = False  # parent field only applies when this is set
    metadata: CueMetadata | None = None


# --- serialization -----------------------------------------------------------

_ENTRY_KEYS = {"cue_id", "name", "description", "parent", "metadata", "linked_cards"}
_META_KEYS = {"model_types", "risks", "implementations", "related_cues", "related_cwes"}


def entry_to_document(entry: CueEntry) -> dict:
    return {
        "cue_id": entry.cue_id,
        "name": entry.name,
        "description": entry.description,
        "parent": entry.parent,
        "metadata": {
            "model_types": list(entry.metadata.model_types),
            "risks": list(entry.metadata.risks),
            "implementations": list(entry.metadata.implementations),
            "related_cues": list(entry.metadata.related_cues),
            "related_cwes": list(entry.metadata.related_cwes),
        },
        "linked_cards": list(entry.linked_cards),
    }


def metadata_from_document(raw: dict) -> CueMetadata:
    canonical.reject_unknown_keys(raw, _META_KEYS, "cue metadata")
    return CueMetadata(
        model_types=tuple(raw.get("model_types", [])),
        risks=tuple(raw.get("risks", [])),
        implementations=tuple(raw.get("implementations", [])),
        related_cues=tuple(raw.get("related_cues", [])),
        related_cwes=tuple(raw.get("related_cwes", [])),
    )


def entry_from_document(doc: dict, versions: tuple[CueVersion, ...] = ()) -> CueEntry:
    canonical.reject_unknown_keys(doc, _ENTRY_KEYS, "cue entry")
    return CueEntry(
        cue_id=doc["cue_id"],
        name=doc.get("name", ""),
        description=doc.get("description", ""),
        parent=doc.get("parent"),
        metadata=metadata_from_document(doc.get("metadata", {})),
        versions=versions,
        linked_cards=tuple(doc.get("linked_cards", [])),
    )


def serialize_entry(entry: CueEntry) -> bytes:
    return canonical.dumps(entry_to_document(entry))


def parse_entry(document: bytes | str) -> CueEntry:
    return entry_from_document(canonical.loads(document))


# --- registry ----------------------------------------------------------------

class CueRegistry:
    """In-memory CUE store; creations serialize on the id allocator."""

    def __init__(self):
        self._entries: dict[str, CueEntry] = {}
        self._next_sequence = 1

    def _snapshot_version(self, entry: CueEntry, changed_at: datetime,
                          change_note: str) -> CueEntry:
        version = CueVersion(
            version_number=len(entry.versions) + 1,
            snapshot=entry_to_document(entry),
            changed_at=changed_at,
            change_note=change_note,
        )
        return replace(entry, versions=entry.versions + (version,))

    def get(self, cue_id: str) -> CueEntry:
        if cue_id not in self._entries:
            raise UnknownEntry(f"no CUE entry {cue_id!r}", cue_id)
        return self._entries[cue_id]

    def entries(self) -> list[CueEntry]:
        return [self._entries[k] for k in sorted(self._entries, key=cue_sequence)]

    def prepare_create(self, name: str, description: str = "",
                       parent: str | None = None,
                       metadata: CueMetadata | None = None,
                       now: datetime | None = None) -> CueEntry:
        """Validate and build the entry without touching the registry."""
        if not name.strip():
            raise EmptyName("CUE entries need a name")
        if parent is not None and parent not in self._entries:
            raise UnknownParent(f"parent {parent!r} does not exist", parent)
        cue_id = format_cue_id(self._next_sequence)
        entry = CueEntry(cue_id=cue_id, name=name, description=description,
                         parent=parent, metadata=metadata or CueMetadata())
        return self._snapshot_version(entry, now or datetime.now().astimezone(), "created")

    def commit_entry(self, entry: CueEntry) -> CueEntry:
        if entry.cue_id not in self._entries:
            self._next_sequence = max(self._next_sequence, cue_sequence(entry.cue_id) + 1)
        self._entries[entry.cue_id] = entry
        return entry

    def create_entry(self, name: str, description: str = "",
                     parent: str | None = None,
                     metadata: CueMetadata | None = None,
                     now: datetime | None = None) -> CueEntry:
        return self.commit_entry(self.prepare_create(name, description, parent, metadata, now))

    def _would_cycle(self, cue_id: str, new_parent: str | None) -> bool:
        seen = {cue_id}
        current = new_parent
        while current is not None:
            if current in seen:
                return True
            seen.add(current)
            current = self._entries[current].parent
        return False

    def prepare_update(self, cue_id: str, changes: CueChanges,
                       change_note: str = "", now: datetime | None = None) -> CueEntry:
        """Validate and build the updated entry without touching the registry."""
        entry = self.get(cue_id)
        new_parent = entry.parent
        if changes.reparent:
            new_parent = changes.parent
            if new_parent is not None:
                if new_parent not in self._entries:
                    raise UnknownParent(f"parent {new_parent!r} does not exist", new_parent)
                if self._would_cycle(cue_id, new_parent):
                    raise CycleDetected(
                        f"reparenting {cue_id} under {new_parent} would create a cycle", cue_id)
        if changes.name is not None and not changes.name.strip():
            raise EmptyName("CUE entries need a name", cue_id)
        entry = replace(
            entry,
            name=changes.name if changes.name is not None else entry.name,
            description=changes.description if changes.description is not None
            else entry.description,
            parent=new_parent,
            metadata=changes.metadata if changes.metadata is not None else entry.metadata,
        )
        return self._snapshot_version(entry, now or datetime.now().astimezone(),
                                      change_note or "updated")

    def update_entry(self, cue_id: str, changes: CueChanges,
                     change_note: str = "", now: datetime | None = None) -> CueEntry:
        return self.commit_entry(self.prepare_update(cue_id, changes, change_note, now))

    def prepare_link(self, cue_id: str, card_id: str,
                     now: datetime | None = None) -> CueEntry:
        """Build the linked entry; duplicate links return the entry unchanged."""
        entry = self.get(cue_id)
        if card_id in entry.linked_cards:
            return entry
        entry = replace(entry, linked_cards=entry.linked_cards + (card_id,))
        return self._snapshot_version(entry, now or datetime.now().astimezone(),
                                      f"linked to card {card_id}")

    def link_to_card(self, cue_id: str, card_id: str,
                     now: datetime | None = None) -> CueEntry:
        """Record a card association; duplicate links are idempotent no-ops."""
        return self.commit_entry(self.prepare_link(cue_id, card_id, now))

    def subtree_ids(self, root: str) -> set[str]:
        if root not in self._entries:
            raise UnknownSubtreeRoot(f"no CUE entry {root!r}", root)
        children: dict[str, list[str]] = {}
        for entry in self._entries.values():
            if entry.parent is not None:
                children.setdefault(entry.parent, []).append(entry.cue_id)
        result = set()
        stack = [root]
        while stack:
            current = stack.pop()
            result.add(current)
            stack.extend(children.get(current, []))
        return result

    def query(self, subtree_root: str | None = None, metadata_term: str | None = None,
              name_term: str | None = None) -> list[CueEntry]:
        """Entries matching all provided predicates, in cue_id order.

        metadata_term is a case-insensitive substring match over all
        metadata lists.
        """
        candidates = self.entries()
        if subtree_root is not None:
            within = self.subtree_ids(subtree_root)
            candidates = [e for e in candidates if e.cue_id in within]
        if name_term is not None:
            needle = name_term.casefold()
            candidates = [e for e in candidates if needle in e.name.casefold()]
        if metadata_term is not None:
            needle = metadata_term.casefold()

            def hit(entry: CueEntry) -> bool:
                values = (entry.metadata.model_types + entry.metadata.risks
                          + entry.metadata.implementations + entry.metadata.related_cues
                          + entry.metadata.related_cwes)
                return any(needle in v.casefold() for v in values)

            candidates = [e for e in candidates if hit(e)]
        return candidates

    def export(self) -> bytes:
        """Deterministic full-registry dump for open publication."""
        entries = []
        for entry in self.entries():
            doc = entry_to_document(entry)
            doc_versions = [
                {
                    "version_number": v.version_number,
                    "snapshot": v.snapshot,
                    "changed_at": canonical.format_ts(v.changed_at),
                    "change_note": v.change_note,
                }
                for v in entry.versions
            ]
            entries.append({"entry": doc, "versions": doc_versions})
        return canonical.dumps({"registry": "cue", "entries": entries})

    @classmethod
    def import_dump(cls, data: bytes | str) -> "CueRegistry":
        doc = canonical.loads(data)
        if doc.get("registry") != "cue":
            raise MalformedDocument("not a CUE registry dump")
        registry = cls()
        max_seq = 0
        for item in doc.get("entries", []):
            versions = tuple(
                CueVersion(
                    version_number=v["version_number"],
                    snapshot=v["snapshot"],
                    changed_at=canonical.parse_ts(v["changed_at"]),
                    change_note=v.get("change_note", ""),
                )
                for v in item.get("versions", [])
            )
            entry = entry_from_document(item["entry"], versions=versions)
            registry._entries[entry.cue_id] = entry
            max_seq = max(max_seq, cue_sequence(entry.cue_id))
        registry._next_sequence = max_seq + 1
        return registry
