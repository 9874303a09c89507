"""Portfolio pack data model, validation, loading and fixture generation.

A pack on disk is a directory holding a human-editable ``pack.yaml``
manifest plus an ``images/`` directory with one decodable image file per
keyword entry.
"""

from __future__ import annotations

import io
import random
import re
from dataclasses import dataclass
from pathlib import Path

import yaml
from PIL import Image

from .errors import PackError

MANIFEST_NAME = "pack.yaml"
IMAGES_DIR = "images"
FACT_MAX_LEN = 200
KEYWORD_RE = re.compile(r"^[A-Za-z][A-Za-z -]*$")

DEFAULT_CATEGORIES = (
    "animals", "fruits", "flowers", "vehicles", "birds", "trees",
    "instruments", "sports", "tools", "fish", "insects", "gems",
    "vegetables", "planets", "rivers", "mountains", "metals", "fabrics",
)


@dataclass(frozen=True)
class KeywordEntry:
    """One recognizable item: the keyword plus its verbal/graphical cues."""

    keyword: str
    ordinal: int  # fixed slot number, doubles as the numeric cue
    fact: str
    image_ref: str  # filename under the pack's images/ directory


@dataclass(frozen=True)
class Portfolio:
    portfolio_id: str
    category: str
    entries: tuple  # ordered; order is the immutable layout

    def entry_for_ordinal(self, ordinal: int) -> KeywordEntry:
        return self._by_ordinal[ordinal]

    @property
    def _by_ordinal(self) -> dict:
        return {e.ordinal: e for e in self.entries}


@dataclass(frozen=True)
class PortfolioSet:
    """The validated cue corpus a deployment serves to all users."""

    portfolios: tuple
    version: int = 1
    root: Path | None = None

    def __post_init__(self):
        object.__setattr__(self, "_by_id", {p.portfolio_id: p for p in self.portfolios})

    def __len__(self) -> int:
        return len(self.portfolios)

    def ids(self) -> list:
        return sorted(self._by_id)

    def get(self, portfolio_id: str) -> Portfolio:
        return self._by_id[portfolio_id]

    def keyword_for(self, portfolio_id: str, ordinal: int) -> str:
        return self.get(portfolio_id).entry_for_ordinal(ordinal).keyword

    def all_keywords(self) -> set:
        return {e.keyword for p in self.portfolios for e in p.entries}


def validate_pack(pack_dir: str | Path, k: int = 26) -> list:
    """Check every pack invariant; returns a list of diagnostic strings.

    An empty list means the pack is clean.
    """
    pack_dir = Path(pack_dir)
    diagnostics = []
    manifest_path = pack_dir / MANIFEST_NAME
    if not manifest_path.is_file():
        return [f"missing manifest {MANIFEST_NAME}"]
    try:
        raw = yaml.safe_load(manifest_path.read_text())
    except yaml.YAMLError as exc:
        return [f"manifest is not valid YAML: {exc}"]
    if not isinstance(raw, dict) or "portfolios" not in raw:
        return ["manifest must be a mapping with a 'portfolios' list"]

    declared_k = raw.get("keywords_per_portfolio", k)
    if declared_k != k:
        diagnostics.append(
            f"manifest declares {declared_k} keywords per portfolio, expected {k}"
        )
    seen_ids = set()
    for i, praw in enumerate(raw["portfolios"]):
        pid = praw.get("portfolio_id") or f"<portfolio #{i}>"
        if pid in seen_ids:
            diagnostics.append(f"{pid}: duplicate portfolio_id")
        seen_ids.add(pid)
        if not praw.get("category"):
            diagnostics.append(f"{pid}: missing category")
        entries = praw.get("entries") or []
        if len(entries) != k:
            diagnostics.append(f"{pid}: has {len(entries)} entries, expected {k}")
        ordinals = [e.get("ordinal") for e in entries]
        for ordinal in sorted({o for o in ordinals if ordinals.count(o) > 1}):
            diagnostics.append(f"{pid}: duplicate ordinal {ordinal}")
        missing = set(range(1, k + 1)) - set(ordinals)
        if missing and len(entries) == k:
            diagnostics.append(f"{pid}: ordinals missing {sorted(missing)}")
        keywords = [e.get("keyword", "") for e in entries]
        for word in sorted({w for w in keywords if keywords.count(w) > 1}):
            diagnostics.append(f"{pid}: duplicate keyword {word!r}")
        for entry in entries:
            word = entry.get("keyword", "")
            if not KEYWORD_RE.match(word or ""):
                diagnostics.append(
                    f"{pid}: keyword {word!r} must be letters, spaces or hyphens"
                )
            fact = entry.get("fact", "")
            if not fact:
                diagnostics.append(f"{pid}: keyword {word!r} has an empty fact")
            elif len(fact) > FACT_MAX_LEN:
                diagnostics.append(
                    f"{pid}: fact for {word!r} exceeds {FACT_MAX_LEN} characters"
                )
            image = entry.get("image", "")
            image_path = pack_dir / IMAGES_DIR / image
            if not image or not image_path.is_file():
                diagnostics.append(f"{pid}: missing image file {image!r}")
            else:
                try:
                    with Image.open(image_path) as img:
                        img.verify()
                except Exception:
                    diagnostics.append(f"{pid}: image {image!r} is not decodable")
    if not seen_ids:
        diagnostics.append("pack contains no portfolios")
    return diagnostics


def load_pack(pack_dir: str | Path, k: int = 26, version: int = 1) -> PortfolioSet:
    """Validate and load a pack directory into a PortfolioSet."""
    pack_dir = Path(pack_dir)
    diagnostics = validate_pack(pack_dir, k=k)
    if diagnostics:
        raise PackError(diagnostics)
    raw = yaml.safe_load((pack_dir / MANIFEST_NAME).read_text())
    portfolios = []
    for praw in raw["portfolios"]:
        entries = tuple(
            KeywordEntry(
                keyword=e["keyword"],
                ordinal=e["ordinal"],
                fact=e["fact"],
                image_ref=e["image"],
            )
            for e in praw["entries"]
        )
        portfolios.append(
            Portfolio(
                portfolio_id=praw["portfolio_id"],
                category=praw["category"],
                entries=entries,
            )
        )
    return PortfolioSet(portfolios=tuple(portfolios), version=version, root=pack_dir)


_SYLLABLES = (
    "ba be bi bo bu da de di do du ka ke ki ko ku la le li lo lu "
    "ma me mi mo mu na ne ni no nu ra re ri ro ru sa se si so su "
    "ta te ti to tu va ve vi vo vu za ze zi zo zu"
).split()


def _pseudo_word(rng: random.Random, taken: set) -> str:
    while True:
        word = "".join(rng.choice(_SYLLABLES) for _ in range(rng.randint(2, 3)))
        if word not in taken:
            taken.add(word)
            return word


def _placeholder_png(rng: random.Random) -> bytes:
    color = (rng.randrange(256), rng.randrange(256), rng.randrange(256))
    img = Image.new("RGB", (16, 16), color)
    buf = io.BytesIO()
    img.save(buf, format="PNG")
    return buf.getvalue()


def generate_fixture(pack_dir: str | Path, seed: int, n: int = 18, k: int = 26) -> Path:
    """Write a deterministic synthetic pack with placeholder cues."""
    rng = random.Random(seed)
    pack_dir = Path(pack_dir)
    images_dir = pack_dir / IMAGES_DIR
    images_dir.mkdir(parents=True, exist_ok=True)
    taken: set = set()
    portfolios = []
    for i in range(n):
        pid = f"p{i + 1:02d}"
        category = (
            DEFAULT_CATEGORIES[i]
            if i < len(DEFAULT_CATEGORIES)
            else f"category-{i + 1}"
        )
        entries = []
        for ordinal in range(1, k + 1):
            word = _pseudo_word(rng, taken)
            image_name = f"{pid}_{ordinal:02d}.png"
            (images_dir / image_name).write_bytes(_placeholder_png(rng))
            entries.append(
                {
                    "keyword": word,
                    "ordinal": ordinal,
                    "fact": f"The {word} is item {ordinal} of the {category} collection.",
                    "image": image_name,
                }
            )
        portfolios.append({"portfolio_id": pid, "category": category, "entries": entries})
    manifest = {
        "pack_version": 1,
        "name": f"fixture-{n}x{k}-seed{seed}",
        "keywords_per_portfolio": k,
        "portfolios": portfolios,
    }
    (pack_dir / MANIFEST_NAME).write_text(yaml.safe_dump(manifest, sort_keys=False))
    return pack_dir
