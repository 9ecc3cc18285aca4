"""Background knowledge assembly and its logic-program text format.

Facts become ground atoms over one sample constant: concept presence as
contains/2 with a signed concept term, spatial relations as 3-ary atoms.
The text format (bk.pl / pos.pl / neg.pl, one period-terminated clause
per line) is a compatibility surface for external rule learners; the
built-in learner works on the in-memory KnowledgeBase.
"""
from __future__ import annotations

from dataclasses import dataclass, field

from .errors import ParseError, RenderError
from .model import Dataset, is_valid_sample_id
from .relations import DE9IM_NAMES, RelationFact, VOCABULARY

UNARY_PREDICATE = "contains"
EXAMPLE_FUNCTOR = "is_class"

# contains doubles as the topological containment relation at arity 3.
BINARY_PREDICATES = frozenset(VOCABULARY - {"has_a", "pos", "neg"})
PREDICATES = BINARY_PREDICATES | {UNARY_PREDICATE}


@dataclass(frozen=True)
class Atom:
    """Ground fact: predicate applied to a sample constant and signed concepts.

    args[0] is the sample id; each further arg is a (sign, sample, concept)
    triple mirroring the pos(s1,c30) term syntax.
    """

    predicate: str
    args: tuple

    def __post_init__(self):
        if not self.args or not isinstance(self.args[0], str):
            raise ValueError("first atom argument must be the sample constant")
        sample = self.args[0]
        for term in self.args[1:]:
            if (
                not isinstance(term, tuple)
                or len(term) != 3
                or term[0] not in ("pos", "neg")
                or term[1] != sample
                or not isinstance(term[2], int)
            ):
                raise ValueError(f"bad signed concept term {term!r}")
        n = len(self.args)
        if self.predicate == UNARY_PREDICATE and n == 2:
            return
        if self.predicate in BINARY_PREDICATES and n == 3:
            return
        raise ValueError(f"predicate {self.predicate!r} cannot take {n - 1} concept args")

    @property
    def sample_id(self) -> str:
        return self.args[0]


@dataclass(frozen=True)
class KnowledgeBase:
    """Per-sample ground facts plus the positive/negative example split."""

    facts: dict[str, frozenset[Atom]]
    positives: tuple[str, ...]
    negatives: tuple[str, ...]
    declarations: tuple[str, ...] = ()  # reserved for mode/constraint metadata

    def __post_init__(self):
        known = set(self.positives) | set(self.negatives)
        stray = sorted(set(self.facts) - known)
        if stray:
            raise ValueError(f"facts reference samples outside E+/E-: {stray}")

    def sample_facts(self, sample_id: str) -> frozenset[Atom]:
        return self.facts.get(sample_id, frozenset())

    def all_samples(self) -> tuple[str, ...]:
        return tuple(sorted(set(self.positives) | set(self.negatives)))


def fact_to_atom(sample_id: str, fact: RelationFact) -> Atom | None:
    """Map a relation fact to its atom; has_a is derivable and not stored."""
    if fact.object is None:
        if fact.name == "has_a":
            return None
        cid, sign = fact.subject
        return Atom(UNARY_PREDICATE, (sample_id, (sign, sample_id, cid)))
    s_cid, s_sign = fact.subject
    o_cid, o_sign = fact.object
    return Atom(
        fact.name,
        (sample_id, (s_sign, sample_id, s_cid), (o_sign, sample_id, o_cid)),
    )


def build_kb(dataset: Dataset, facts_per_sample: dict[str, frozenset[RelationFact]]) -> KnowledgeBase:
    """Assemble the knowledge base; E+ = model-truth positives, E- the rest."""
    facts: dict[str, frozenset[Atom]] = {}
    positives, negatives = [], []
    for s in dataset.samples:
        atoms = set()
        for fact in facts_per_sample.get(s.sample_id, frozenset()):
            atom = fact_to_atom(s.sample_id, fact)
            if atom is not None:
                atoms.add(atom)
        facts[s.sample_id] = frozenset(atoms)
        (positives if s.model_truth == "positive" else negatives).append(s.sample_id)
    return KnowledgeBase(facts, tuple(sorted(positives)), tuple(sorted(negatives)))


def render_term(term) -> str:
    sign, sample, cid = term
    return f"{sign}({sample},c{cid})"


def render_atom(atom: Atom) -> str:
    if atom.predicate not in PREDICATES:
        raise RenderError(f"unknown predicate {atom.predicate!r}")
    rendered = [atom.args[0]] + [render_term(t) for t in atom.args[1:]]
    return f"{atom.predicate}({', '.join(rendered)})."


def render_kb(kb: KnowledgeBase) -> tuple[str, str, str]:
    """Render (background, positives, negatives) documents.

    One clause per line, LF endings, canonical order: samples ascending,
    facts per sample sorted by their rendered text. parse_kb inverts this.
    """
    for sid in kb.all_samples():
        if not is_valid_sample_id(sid):
            raise RenderError(f"sample id {sid!r} is not a lowercase identifier")
    bk_lines = []
    for sid in kb.all_samples():
        bk_lines.extend(sorted(render_atom(a) for a in kb.sample_facts(sid)))
    pos_lines = [f"{EXAMPLE_FUNCTOR}({sid})." for sid in sorted(kb.positives)]
    neg_lines = [f"{EXAMPLE_FUNCTOR}({sid})." for sid in sorted(kb.negatives)]

    def doc(lines: list[str]) -> str:
        return "\n".join(lines) + ("\n" if lines else "")

    return doc(bk_lines), doc(pos_lines), doc(neg_lines)


class _LineParser:
    """Recursive-descent parser for one clause line, tracking the column."""

    def __init__(self, text: str, doc: str, line_no: int):
        self.text = text
        self.doc = doc
        self.line_no = line_no
        self.pos = 0

    def error(self, message: str) -> ParseError:
        return ParseError(f"{self.doc}: {message}", line=self.line_no, column=self.pos + 1)

    def skip_ws(self):
        while self.pos < len(self.text) and self.text[self.pos] in " \t":
            self.pos += 1

    def expect(self, ch: str):
        if self.pos >= len(self.text) or self.text[self.pos] != ch:
            found = self.text[self.pos] if self.pos < len(self.text) else "end of line"
            raise self.error(f"expected {ch!r}, found {found!r}")
        self.pos += 1

    def identifier(self) -> str:
        start = self.pos
        while self.pos < len(self.text) and (
            self.text[self.pos].isalnum() or self.text[self.pos] == "_"
        ):
            self.pos += 1
        if self.pos == start:
            raise self.error("expected an identifier")
        return self.text[start : self.pos]

    def term(self, sample_hint: str | None):
        name = self.identifier()
        self.skip_ws()
        if name in ("pos", "neg") and self.pos < len(self.text) and self.text[self.pos] == "(":
            self.expect("(")
            self.skip_ws()
            sample = self.identifier()
            self.skip_ws()
            self.expect(",")
            self.skip_ws()
            concept = self.identifier()
            if not (concept.startswith("c") and concept[1:].isdigit()):
                raise self.error(f"expected a concept constant like c30, found {concept!r}")
            self.skip_ws()
            self.expect(")")
            return (name, sample, int(concept[1:]))
        return name

    def clause(self) -> tuple[str, tuple]:
        self.skip_ws()
        predicate = self.identifier()
        self.skip_ws()
        self.expect("(")
        args = []
        while True:
            self.skip_ws()
            args.append(self.term(None))
            self.skip_ws()
            if self.pos < len(self.text) and self.text[self.pos] == ",":
                self.pos += 1
                continue
            break
        self.expect(")")
        self.skip_ws()
        self.expect(".")
        self.skip_ws()
        if self.pos != len(self.text):
            raise self.error("trailing characters after clause")
        return predicate, tuple(args)


def _parse_lines(text: str, doc: str):
    for line_no, raw in enumerate(text.split("\n"), start=1):
        line = raw.strip()
        if not line or line.startswith("%"):
            continue
        yield _LineParser(raw, doc, line_no)


def _parse_examples(text: str, doc: str) -> tuple[str, ...]:
    ids = []
    for parser in _parse_lines(text, doc):
        predicate, args = parser.clause()
        if predicate != EXAMPLE_FUNCTOR:
            raise ParseError(
                f"{doc}: expected {EXAMPLE_FUNCTOR!r}, found {predicate!r}",
                line=parser.line_no,
                column=1,
            )
        if len(args) != 1 or not isinstance(args[0], str):
            raise ParseError(
                f"{doc}: {EXAMPLE_FUNCTOR} takes exactly one sample id",
                line=parser.line_no,
                column=1,
            )
        if args[0] in ids:
            raise ParseError(
                f"{doc}: duplicate example {args[0]!r}",
                line=parser.line_no,
                column=1,
            )
        ids.append(args[0])
    return tuple(sorted(ids))


def parse_kb(background: str, pos: str, neg: str) -> KnowledgeBase:
    """Parse the three rendered documents back into a KnowledgeBase."""
    positives = _parse_examples(pos, "positives")
    negatives = _parse_examples(neg, "negatives")
    overlap = set(positives) & set(negatives)
    if overlap:
        raise ParseError(
            f"examples {sorted(overlap)} appear in both documents", line=1, column=1
        )
    known = set(positives) | set(negatives)
    facts: dict[str, set[Atom]] = {sid: set() for sid in known}
    for parser in _parse_lines(background, "background"):
        predicate, args = parser.clause()
        if predicate not in PREDICATES:
            raise ParseError(
                f"background: unknown predicate {predicate!r}",
                line=parser.line_no,
                column=1,
            )
        if not args or not isinstance(args[0], str):
            raise ParseError(
                "background: first argument must be a sample constant",
                line=parser.line_no,
                column=1,
            )
        sample = args[0]
        if sample not in known:
            raise ParseError(
                f"background: sample {sample!r} missing from the example lists",
                line=parser.line_no,
                column=1,
            )
        try:
            atom = Atom(predicate, args)
        except ValueError as exc:
            raise ParseError(f"background: {exc}", line=parser.line_no, column=1) from exc
        facts[sample].add(atom)
    return KnowledgeBase(
        {sid: frozenset(atoms) for sid, atoms in facts.items()}, positives, negatives
    )
