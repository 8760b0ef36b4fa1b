"""Text format for workspaces: languages, structures, codes, certificates.

A workspace file (extension ``.ikit``) is a sequence of blocks.  Names must
be declared before they are referenced, so a self-contained file starts with
its language blocks.

::

    language ring {
      const 0;
      const 1;
      fn add/2;
      fn mul/2;
    }

    structure z2 : ring {
      universe 2;
      const 0 = 0;
      const 1 = 1;
      fn add = [[0, 1], [1, 0]];
      fn mul = [[0, 0], [0, 1]];
    }

    code frac : ring -> ring {
      dim 2;
      par 0;
      U := !(x1_2 = 0);
      E := mul(x1_1, x2_2) = mul(x2_1, x1_2);
      const 0 := x1_1 = 0;
      const 1 := x1_1 = x1_2;
      fn add := ...;
      fn mul := ...;
      descriptor := ...;
    }

    formula unit : ring := exists y. mul(y, x) = 1;

    homotopy {
      codes frac frac;
      theta := ...;
      mode with_params;
    }

    bi {
      gamma frac;
      delta idring;
      thetaA := ...;
      thetaB := ...;
      mode strong;
    }

A ``descriptor`` entry turns the surrounding code block into a regular code.
``U`` and ``E`` entries may carry a decorative variable list, as in
``U(x1_1, x1_2) := ...``; the names are checked against the declared
dimension and otherwise ignored.  ``#`` starts a line comment.

Structure tables may also be written as generator calls, ``fn add =
mod_add(5);``, expanded through the ``generators`` registry passed to
``load``/``loads``.  The printer always emits explicit tables, so files
written by ``dumps`` round-trip byte for byte.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, field

from .codes import InterpretationCode, RegularCode
from .logic import Formula, Language, parse, print_formula
from .models import FiniteStructure
from .verify import BI_MODES, HOMOTOPY_MODES, BiCertificate, HomotopyCertificate

__all__ = [
    "BiEntry",
    "Document",
    "DslError",
    "FormulaEntry",
    "HomotopyEntry",
    "dumps",
    "load",
    "loads",
]


class DslError(Exception):
    pass


@dataclass(frozen=True)
class FormulaEntry:
    lang: str
    formula: Formula


@dataclass(frozen=True)
class HomotopyEntry:
    first: str
    second: str
    cert: HomotopyCertificate


@dataclass(frozen=True)
class BiEntry:
    gamma: str
    delta: str
    cert: BiCertificate


@dataclass
class Document:
    """Everything declared in one workspace file, in declaration order."""

    languages: dict[str, Language] = field(default_factory=dict)
    structures: dict[str, FiniteStructure] = field(default_factory=dict)
    codes: dict[str, InterpretationCode | RegularCode] = field(default_factory=dict)
    formulas: dict[str, FormulaEntry] = field(default_factory=dict)
    homotopies: list[HomotopyEntry] = field(default_factory=list)
    bis: list[BiEntry] = field(default_factory=list)
    order: list[tuple[str, object]] = field(default_factory=list)


_TOKEN = re.compile(
    r"(?P<skip>\s+|#[^\n]*)"
    r"|(?P<punct>:=|->|[{}()\[\],;:/=])"
    r"|(?P<name>[A-Za-z_][A-Za-z0-9_]*)"
    r"|(?P<number>\d+)"
)

_SLOT_VAR = re.compile(r"x[1-9][0-9]*_[1-9][0-9]*\Z")


class _Parser:
    def __init__(self, text: str, env: Document | None, generators: dict):
        self.text = text
        self.pos = 0
        self.env = env
        self.generators = generators
        self.doc = Document()

    # -- tokens ------------------------------------------------------------

    def _line(self, pos: int) -> int:
        return self.text.count("\n", 0, pos) + 1

    def fail(self, message: str, pos: int | None = None):
        where = self.pos if pos is None else pos
        raise DslError(f"line {self._line(where)}: {message}")

    def next(self) -> tuple[str, str]:
        while self.pos < len(self.text):
            m = _TOKEN.match(self.text, self.pos)
            if m is None:
                self.fail(f"unexpected character {self.text[self.pos]!r}")
            self.pos = m.end()
            if m.lastgroup != "skip":
                return m.lastgroup, m.group()
        return "eof", ""

    def peek(self) -> tuple[str, str]:
        saved = self.pos
        tok = self.next()
        self.pos = saved
        return tok

    def expect(self, value: str) -> None:
        kind, got = self.next()
        if got != value:
            shown = got if kind != "eof" else "end of file"
            self.fail(f"expected {value!r}, found {shown!r}")

    def name(self, what: str) -> str:
        kind, got = self.next()
        if kind not in ("name", "number"):
            self.fail(f"expected {what}, found {got!r}")
        return got

    def number(self, what: str) -> int:
        kind, got = self.next()
        if kind != "number":
            self.fail(f"expected {what}, found {got!r}")
        return int(got)

    def raw_formula(self) -> tuple[str, int]:
        """Consume text up to the next semicolon; formulas cannot contain one."""
        start = self.pos
        end = self.text.find(";", start)
        if end < 0:
            self.fail("unterminated formula, missing ';'")
        self.pos = end + 1
        raw = self.text[start:end].strip()
        if not raw:
            self.fail("empty formula", start)
        return raw, start

    def formula(self, lang: Language, context: str) -> Formula:
        raw, start = self.raw_formula()
        try:
            return parse(raw, lang)
        except Exception as exc:
            self.fail(f"{context}: {exc}", start)

    # -- name resolution ---------------------------------------------------

    def _lookup(self, table: str, key: str, what: str):
        found = getattr(self.doc, table).get(key)
        if found is None and self.env is not None:
            found = getattr(self.env, table).get(key)
        if found is None:
            self.fail(f"unknown {what} {key!r}")
        return found

    def _declare(self, table: str, key: str, value, what: str) -> None:
        if key in getattr(self.doc, table):
            self.fail(f"duplicate {what} {key!r}")
        getattr(self.doc, table)[key] = value
        self.doc.order.append((what, key))

    # -- blocks ------------------------------------------------------------

    def document(self) -> Document:
        while True:
            kind, word = self.next()
            if kind == "eof":
                return self.doc
            if word == "language":
                self.language_block()
            elif word == "structure":
                self.structure_block()
            elif word == "code":
                self.code_block()
            elif word == "formula":
                self.formula_decl()
            elif word == "homotopy":
                self.homotopy_block()
            elif word == "bi":
                self.bi_block()
            else:
                self.fail(f"expected a block keyword, found {word!r}")

    def language_block(self) -> None:
        name = self.name("language name")
        self.expect("{")
        constants: list[str] = []
        functions: dict[str, int] = {}
        relations: dict[str, int] = {}
        while True:
            _, word = self.next()
            if word == "}":
                break
            if word == "const":
                sym = self.name("constant name")
                if sym in constants:
                    self.fail(f"duplicate constant {sym!r}")
                constants.append(sym)
            elif word in ("fn", "rel"):
                sym = self.name("symbol name")
                self.expect("/")
                arity = self.number("arity")
                table = functions if word == "fn" else relations
                if sym in table:
                    self.fail(f"duplicate symbol {sym!r}")
                table[sym] = arity
            else:
                self.fail(f"expected const, fn, rel or '}}', found {word!r}")
            self.expect(";")
        lang = Language(name, tuple(constants), functions, relations)
        self._declare("languages", name, lang, "language")

    def structure_block(self) -> None:
        name = self.name("structure name")
        self.expect(":")
        lang = self._lookup("languages", self.name("language name"), "language")
        self.expect("{")
        size = None
        consts: dict[str, int] = {}
        funcs: dict[str, list] = {}
        rels: dict[str, set] = {}
        while True:
            _, word = self.next()
            if word == "}":
                break
            if word == "universe":
                size = self.number("universe size")
                if size < 1:
                    self.fail("universe must be nonempty")
            elif word == "const":
                sym = self.name("constant name")
                self.expect("=")
                consts[sym] = self.number("element")
            elif word == "fn":
                sym = self.name("function name")
                self.expect("=")
                funcs[sym] = self.table_value(sym)
            elif word == "rel":
                sym = self.name("relation name")
                self.expect("=")
                rels[sym] = self.relation_value(sym)
            else:
                self.fail(f"expected a structure entry, found {word!r}")
            self.expect(";")
        if size is None:
            self.fail(f"structure {name!r} has no universe declaration")
        start = self.pos
        try:
            struct = FiniteStructure(lang, size, consts, funcs, rels)
        except Exception as exc:
            self.fail(f"structure {name!r}: {exc}", start)
        self._declare("structures", name, struct, "structure")

    def table_value(self, sym: str):
        kind, word = self.peek()
        if kind == "name":
            return self.generator_call(sym)
        return self.int_list()

    def int_list(self):
        self.expect("[")
        items = []
        kind, word = self.peek()
        if word != "]":
            while True:
                kind, word = self.peek()
                if word == "[":
                    items.append(self.int_list())
                else:
                    items.append(self.number("table entry"))
                kind, word = self.next()
                if word == "]":
                    return items
                if word != ",":
                    self.fail(f"expected ',' or ']', found {word!r}")
        self.next()
        return items

    def relation_value(self, sym: str):
        kind, word = self.peek()
        if kind == "name":
            return self.generator_call(sym)
        self.expect("{")
        tuples: set[tuple[int, ...]] = set()
        kind, word = self.peek()
        if word == "}":
            self.next()
            return tuples
        while True:
            tuples.add(self.int_tuple())
            _, word = self.next()
            if word == "}":
                return tuples
            if word != ",":
                self.fail(f"expected ',' or '}}', found {word!r}")

    def int_tuple(self) -> tuple[int, ...]:
        self.expect("(")
        items = [self.number("element")]
        while True:
            _, word = self.next()
            if word == ")":
                return tuple(items)
            if word != ",":
                self.fail(f"expected ',' or ')', found {word!r}")
            items.append(self.number("element"))

    def generator_call(self, sym: str):
        gen_name = self.name("generator name")
        self.expect("(")
        args = []
        kind, word = self.peek()
        if word == ")":
            self.next()
        else:
            while True:
                args.append(self.number("generator argument"))
                _, word = self.next()
                if word == ")":
                    break
                if word != ",":
                    self.fail(f"expected ',' or ')', found {word!r}")
        gen = self.generators.get(gen_name)
        if gen is None:
            self.fail(f"unknown table generator {gen_name!r} for {sym!r}")
        return gen(*args)

    def code_block(self) -> None:
        name = self.name("code name")
        self.expect(":")
        source = self._lookup("languages", self.name("source language"), "language")
        self.expect("->")
        target = self._lookup("languages", self.name("target language"), "language")
        self.expect("{")
        dim = par = None
        entries: dict[str, Formula] = {}
        descriptor = None
        u_formula = e_formula = None
        while True:
            _, word = self.next()
            if word == "}":
                break
            if word == "dim":
                dim = self.number("dimension")
                self.expect(";")
                continue
            if word == "par":
                par = self.number("parameter count")
                self.expect(";")
                continue
            if word in ("U", "E"):
                self.slot_var_list(word, dim)
                self.expect(":=")
                f = self.formula(target, f"in {word} of code {name!r}")
                if word == "U":
                    if u_formula is not None:
                        self.fail(f"duplicate U in code {name!r}")
                    u_formula = f
                else:
                    if e_formula is not None:
                        self.fail(f"duplicate E in code {name!r}")
                    e_formula = f
                continue
            if word == "descriptor":
                self.expect(":=")
                if descriptor is not None:
                    self.fail(f"duplicate descriptor in code {name!r}")
                descriptor = self.formula(target, f"in descriptor of code {name!r}")
                continue
            if word in ("const", "fn", "rel"):
                sym = self.name("symbol name")
                declared = (
                    source.constants if word == "const"
                    else source.functions if word == "fn"
                    else source.relations
                )
                if sym not in declared:
                    self.fail(f"{sym!r} is not a {word} symbol of {source.name!r}")
                if sym in entries:
                    self.fail(f"duplicate entry for {sym!r} in code {name!r}")
                self.slot_var_list(sym, dim)
                self.expect(":=")
                entries[sym] = self.formula(target, f"in {sym!r} of code {name!r}")
                continue
            self.fail(f"expected a code entry, found {word!r}")
        if dim is None or par is None:
            self.fail(f"code {name!r} needs dim and par declarations")
        if u_formula is None or e_formula is None:
            self.fail(f"code {name!r} needs U and E entries")
        start = self.pos
        try:
            code = InterpretationCode(source, target, dim, par,
                                      U=u_formula, E=e_formula, interp=entries)
            if descriptor is not None:
                code = RegularCode(code, descriptor)
        except Exception as exc:
            self.fail(f"code {name!r}: {exc}", start)
        self._declare("codes", name, code, "code")

    def slot_var_list(self, entry: str, dim: int | None) -> None:
        """Optional decorative variable list, e.g. ``U(x1_1, x1_2)``."""
        _, word = self.peek()
        if word != "(":
            return
        if dim is None:
            self.fail(f"dim must be declared before the variable list of {entry!r}")
        self.next()
        while True:
            var = self.name("slot variable")
            if not _SLOT_VAR.match(var) or int(var.split("_")[1]) > dim:
                self.fail(f"{var!r} is not a slot variable of {entry!r}")
            _, word = self.next()
            if word == ")":
                return
            if word != ",":
                self.fail(f"expected ',' or ')', found {word!r}")

    def formula_decl(self) -> None:
        name = self.name("formula name")
        self.expect(":")
        lang_name = self.name("language name")
        lang = self._lookup("languages", lang_name, "language")
        self.expect(":=")
        f = self.formula(lang, f"in formula {name!r}")
        self._declare("formulas", name, FormulaEntry(lang_name, f), "formula")

    def _code_target(self, code) -> Language:
        return code.code.target if isinstance(code, RegularCode) else code.target

    def _code_source(self, code) -> Language:
        return code.code.source if isinstance(code, RegularCode) else code.source

    def homotopy_block(self) -> None:
        self.expect("{")
        first = second = None
        theta = delta = None
        mode = "with_params"
        while True:
            _, word = self.next()
            if word == "}":
                break
            if word == "codes":
                first = self.name("code name")
                second = self.name("code name")
                lang1 = self._code_target(self._lookup("codes", first, "code"))
                lang2 = self._code_target(self._lookup("codes", second, "code"))
                if lang1 is not lang2 and lang1 != lang2:
                    self.fail("homotopy codes interpret into different languages")
            elif word in ("theta", "delta"):
                self.expect(":=")
                if first is None:
                    self.fail(f"codes must be declared before {word}")
                lang = self._code_target(self._lookup("codes", first, "code"))
                f = self.formula(lang, f"in {word} of homotopy block")
                if word == "theta":
                    theta = f
                else:
                    delta = f
                continue
            elif word == "mode":
                mode = self.name("mode")
                if mode not in HOMOTOPY_MODES:
                    self.fail(f"unknown homotopy mode {mode!r}")
            else:
                self.fail(f"expected a homotopy entry, found {word!r}")
            self.expect(";")
        if first is None or theta is None:
            self.fail("homotopy block needs codes and theta entries")
        cert = HomotopyCertificate(theta, delta, mode)
        self.doc.homotopies.append(HomotopyEntry(first, second, cert))
        self.doc.order.append(("homotopy", len(self.doc.homotopies) - 1))

    def bi_block(self) -> None:
        self.expect("{")
        gamma_name = delta_name = None
        gamma = delta = None
        formulas: dict[str, Formula | None] = {
            "thetaA": None, "thetaB": None, "deltaA": None, "deltaB": None,
        }
        mode = "weak"
        while True:
            _, word = self.next()
            if word == "}":
                break
            if word == "gamma":
                gamma_name = self.name("code name")
                gamma = self._lookup("codes", gamma_name, "code")
            elif word == "delta":
                delta_name = self.name("code name")
                delta = self._lookup("codes", delta_name, "code")
            elif word in formulas:
                self.expect(":=")
                if gamma is None or delta is None:
                    self.fail(f"gamma and delta must be declared before {word}")
                # Side A formulas live in the interpreted language, side B
                # formulas in the host language.
                lang = (self._code_source(gamma) if word.endswith("A")
                        else self._code_target(gamma))
                formulas[word] = self.formula(lang, f"in {word} of bi block")
                continue
            elif word == "mode":
                mode = self.name("mode")
                if mode not in BI_MODES:
                    self.fail(f"unknown bi-interpretation mode {mode!r}")
            else:
                self.fail(f"expected a bi entry, found {word!r}")
            self.expect(";")
        if gamma is None or delta is None:
            self.fail("bi block needs gamma and delta entries")
        if formulas["thetaA"] is None or formulas["thetaB"] is None:
            self.fail("bi block needs thetaA and thetaB entries")
        if (self._code_source(gamma) != self._code_target(delta)
                or self._code_target(gamma) != self._code_source(delta)):
            self.fail("bi codes do not interpret into each other's languages")
        start = self.pos
        try:
            cert = BiCertificate(
                gamma, delta, formulas["thetaA"], formulas["thetaB"],
                delta_a=formulas["deltaA"], delta_b=formulas["deltaB"], mode=mode,
            )
        except Exception as exc:
            self.fail(f"bi block: {exc}", start)
        self.doc.bis.append(BiEntry(gamma_name, delta_name, cert))
        self.doc.order.append(("bi", len(self.doc.bis) - 1))


def loads(text: str, env: Document | None = None, generators: dict | None = None) -> Document:
    """Parse workspace text into a Document.

    ``env`` makes the names of another document visible; ``generators`` maps
    generator names usable in structure tables to callables returning the
    expanded table.
    """
    return _Parser(text, env, generators or {}).document()


def load(path, env: Document | None = None, generators: dict | None = None) -> Document:
    with open(path, encoding="utf-8") as handle:
        return loads(handle.read(), env, generators)


def _lang_key(doc: Document, lang: Language) -> str:
    for key, value in doc.languages.items():
        if value is lang or value == lang:
            return key
    return lang.name


def _symbol_lines(struct: FiniteStructure) -> list[str]:
    lang = struct.lang
    lines = [f"  universe {struct.size};"]
    for sym in lang.constants:
        lines.append(f"  const {sym} = {struct.const_interp[sym]};")
    for sym in lang.functions:
        lines.append(f"  fn {sym} = {json.dumps(struct.func_interp[sym])};")
    for sym in lang.relations:
        body = ", ".join(
            "(" + ", ".join(str(e) for e in t) + ")"
            for t in sorted(struct.rel_interp[sym])
        )
        lines.append(f"  rel {sym} = {{{body}}};")
    return lines


def _code_lines(doc: Document, code) -> list[str]:
    descriptor = None
    if isinstance(code, RegularCode):
        descriptor = code.descriptor
        code = code.code
    lines = [f"  dim {code.dim};", f"  par {code.par_dim};"]
    lines.append(f"  U := {print_formula(code.U)};")
    lines.append(f"  E := {print_formula(code.E)};")
    for kind, symbols in (
        ("const", code.source.constants),
        ("fn", code.source.functions),
        ("rel", code.source.relations),
    ):
        for sym in symbols:
            lines.append(f"  {kind} {sym} := {print_formula(code.interp[sym])};")
    if descriptor is not None:
        lines.append(f"  descriptor := {print_formula(descriptor)};")
    return lines


def dumps(doc: Document) -> str:
    """Render a Document in the canonical layout.

    ``loads(dumps(doc))`` reproduces the document, and ``dumps`` of the
    reparse reproduces the text byte for byte.
    """
    blocks = []
    for kind, key in doc.order:
        if kind == "language":
            lang = doc.languages[key]
            lines = [f"language {key} {{"]
            lines += [f"  const {c};" for c in lang.constants]
            lines += [f"  fn {f}/{a};" for f, a in lang.functions.items()]
            lines += [f"  rel {r}/{a};" for r, a in lang.relations.items()]
            lines.append("}")
        elif kind == "structure":
            struct = doc.structures[key]
            lines = [f"structure {key} : {_lang_key(doc, struct.lang)} {{"]
            lines += _symbol_lines(struct)
            lines.append("}")
        elif kind == "code":
            code = doc.codes[key]
            inner = code.code if isinstance(code, RegularCode) else code
            src = _lang_key(doc, inner.source)
            tgt = _lang_key(doc, inner.target)
            lines = [f"code {key} : {src} -> {tgt} {{"]
            lines += _code_lines(doc, code)
            lines.append("}")
        elif kind == "formula":
            entry = doc.formulas[key]
            lines = [f"formula {key} : {entry.lang} := {print_formula(entry.formula)};"]
        elif kind == "homotopy":
            entry = doc.homotopies[key]
            lines = ["homotopy {", f"  codes {entry.first} {entry.second};"]
            lines.append(f"  theta := {print_formula(entry.cert.theta)};")
            if entry.cert.delta is not None:
                lines.append(f"  delta := {print_formula(entry.cert.delta)};")
            lines += [f"  mode {entry.cert.mode};", "}"]
        else:
            entry = doc.bis[key]
            cert = entry.cert
            lines = [
                "bi {",
                f"  gamma {entry.gamma};",
                f"  delta {entry.delta};",
                f"  thetaA := {print_formula(cert.theta_a)};",
                f"  thetaB := {print_formula(cert.theta_b)};",
            ]
            if cert.delta_a is not None:
                lines.append(f"  deltaA := {print_formula(cert.delta_a)};")
            if cert.delta_b is not None:
                lines.append(f"  deltaB := {print_formula(cert.delta_b)};")
            lines += [f"  mode {cert.mode};", "}"]
        blocks.append("\n".join(lines))
    return "\n\n".join(blocks) + "\n"
