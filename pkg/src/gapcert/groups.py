"""Group models: canonical normal forms, multiplication, and metric balls.

A model realizes the presented group concretely so that equal group
elements get equal hashable keys.  Integer matrix entries are Python ints,
so products never overflow.
"""

from __future__ import annotations

import hashlib
import json
from typing import List, Optional, Sequence, Tuple

from .words import Presentation, Word

MatrixKey = Tuple[Tuple[int, ...], ...]


class InconsistentModelError(ValueError):
    """A relator does not evaluate to the identity under the model."""


class GroupElement:
    __slots__ = ("model", "key", "_hash")

    def __init__(self, model: "GroupModel", key):
        self.model = model
        self.key = key
        self._hash = hash(key)

    def inverse(self) -> "GroupElement":
        return self.model.inverse(self)

    def __mul__(self, other: "GroupElement") -> "GroupElement":
        return self.model.multiply(self, other)

    def __eq__(self, other):
        return (
            isinstance(other, GroupElement)
            and self.key == other.key
            and self.model.model_id == other.model.model_id
        )

    def __lt__(self, other):
        return self.key < other.key

    def __hash__(self):
        return self._hash

    def __repr__(self):
        return f"GroupElement({self.key!r})"


def _mat_mul(a: MatrixKey, b: MatrixKey, mod: Optional[int] = None) -> MatrixKey:
    d = len(a)
    if mod is None:
        return tuple(
            tuple(sum(a[i][k] * b[k][j] for k in range(d)) for j in range(d))
            for i in range(d)
        )
    return tuple(
        tuple(sum(a[i][k] * b[k][j] for k in range(d)) % mod for j in range(d))
        for i in range(d)
    )


def _mat_identity(d: int) -> MatrixKey:
    return tuple(tuple(1 if i == j else 0 for j in range(d)) for i in range(d))


def _det(a: Sequence[Sequence[int]]) -> int:
    d = len(a)
    if d == 1:
        return a[0][0]
    if d == 2:
        return a[0][0] * a[1][1] - a[0][1] * a[1][0]
    total = 0
    for j in range(d):
        minor = [row[:j] + row[j + 1:] for row in [list(r) for r in a[1:]]]
        total += (-1) ** j * a[0][j] * _det(minor)
    return total


def _adjugate(a: MatrixKey) -> MatrixKey:
    d = len(a)
    if d == 1:
        return ((1,),)
    rows = [list(r) for r in a]
    cof = [[0] * d for _ in range(d)]
    for i in range(d):
        for j in range(d):
            minor = [row[:j] + row[j + 1:] for k, row in enumerate(rows) if k != i]
            cof[i][j] = (-1) ** (i + j) * _det(minor)
    return tuple(tuple(cof[j][i] for j in range(d)) for i in range(d))


class GroupModel:
    """Interface shared by all models."""

    model_id: str
    n_generators: int

    def identity(self) -> GroupElement:
        raise NotImplementedError

    def generator(self, i: int) -> GroupElement:
        raise NotImplementedError

    def multiply(self, a: GroupElement, b: GroupElement) -> GroupElement:
        raise NotImplementedError

    def inverse(self, a: GroupElement) -> GroupElement:
        raise NotImplementedError

    def generators(self) -> List[GroupElement]:
        return [self.generator(i) for i in range(self.n_generators)]

    def evaluate(self, w: Word) -> GroupElement:
        out = self.identity()
        gens = self.generators()
        invs = [self.inverse(g) for g in gens]
        for idx, sign in w:
            if idx >= self.n_generators:
                raise ValueError(f"word letter {idx} outside model generators")
            out = self.multiply(out, gens[idx] if sign > 0 else invs[idx])
        return out

    def validate_key(self, key) -> None:
        raise NotImplementedError

    def spec(self) -> dict:
        raise NotImplementedError

    def key_to_json(self, key):
        raise NotImplementedError

    def key_from_json(self, data):
        raise NotImplementedError

    def _wrap(self, key) -> GroupElement:
        return GroupElement(self, key)


def _spec_id(spec: dict) -> str:
    blob = json.dumps(spec, separators=(",", ":"), sort_keys=True)
    return hashlib.sha256(blob.encode()).hexdigest()[:16]


class MatrixModel(GroupModel):
    """Generators as invertible integer matrices (det +-1)."""

    def __init__(self, images: Sequence[Sequence[Sequence[int]]]):
        if not images:
            raise ValueError("need at least one generator image")
        keys = [tuple(tuple(int(x) for x in row) for row in img) for img in images]
        d = len(keys[0])
        for k in keys:
            if len(k) != d or any(len(row) != d for row in k):
                raise ValueError("generator images must be square of equal size")
            if _det(k) not in (1, -1):
                raise ValueError("generator image is not invertible over Z")
        self.dim = d
        self.images = keys
        self.inv_images = [self._invert_key(k) for k in keys]
        self.n_generators = len(keys)
        self.model_id = f"matrix:{_spec_id(self.spec())}"

    def _invert_key(self, key: MatrixKey) -> MatrixKey:
        det = _det(key)
        adj = _adjugate(key)
        return tuple(tuple(x * det for x in row) for row in adj)  # det is +-1

    def identity(self) -> GroupElement:
        return self._wrap(_mat_identity(self.dim))

    def generator(self, i: int) -> GroupElement:
        return self._wrap(self.images[i])

    def multiply(self, a: GroupElement, b: GroupElement) -> GroupElement:
        return self._wrap(_mat_mul(a.key, b.key))

    def inverse(self, a: GroupElement) -> GroupElement:
        return self._wrap(self._invert_key(a.key))

    def validate_key(self, key) -> None:
        if (
            len(key) != self.dim
            or any(len(row) != self.dim for row in key)
            or any(not isinstance(x, int) for row in key for x in row)
        ):
            raise ValueError(f"malformed matrix key {key!r}")
        if _det(key) not in (1, -1):
            raise ValueError("matrix key is not invertible over Z")

    def spec(self) -> dict:
        return {
            "type": "matrix",
            "dim": self.dim,
            "images": [[list(r) for r in k] for k in self.images],
        }

    def key_to_json(self, key):
        return [list(r) for r in key]

    def key_from_json(self, data):
        key = tuple(tuple(int(x) for x in row) for row in data)
        self.validate_key(key)
        return key


class ModularMatrixModel(GroupModel):
    """Matrix model with entries reduced mod m >= 2."""

    def __init__(self, images, modulus: int):
        if modulus < 2:
            raise ValueError("modulus must be >= 2")
        keys = [
            tuple(tuple(int(x) % modulus for x in row) for row in img)
            for img in images
        ]
        if not keys:
            raise ValueError("need at least one generator image")
        d = len(keys[0])
        self.modulus = modulus
        self.dim = d
        for k in keys:
            if len(k) != d or any(len(row) != d for row in k):
                raise ValueError("generator images must be square of equal size")
            try:
                pow(_det(k) % modulus, -1, modulus)
            except ValueError:
                raise ValueError("generator image is not invertible mod m") from None
        self.images = keys
        self.inv_images = [self._invert_key(k) for k in keys]
        self.n_generators = len(keys)
        self.model_id = f"modular:{_spec_id(self.spec())}"

    def _invert_key(self, key: MatrixKey) -> MatrixKey:
        m = self.modulus
        det_inv = pow(_det(key) % m, -1, m)
        adj = _adjugate(key)
        return tuple(tuple((x * det_inv) % m for x in row) for row in adj)

    def identity(self) -> GroupElement:
        return self._wrap(_mat_identity(self.dim))

    def generator(self, i: int) -> GroupElement:
        return self._wrap(self.images[i])

    def multiply(self, a: GroupElement, b: GroupElement) -> GroupElement:
        return self._wrap(_mat_mul(a.key, b.key, self.modulus))

    def inverse(self, a: GroupElement) -> GroupElement:
        return self._wrap(self._invert_key(a.key))

    def validate_key(self, key) -> None:
        if len(key) != self.dim or any(len(row) != self.dim for row in key):
            raise ValueError(f"malformed matrix key {key!r}")
        if any(not (0 <= x < self.modulus) for row in key for x in row):
            raise ValueError("matrix key entries out of range for modulus")
        pow(_det(key) % self.modulus, -1, self.modulus)

    def spec(self) -> dict:
        return {
            "type": "modular",
            "dim": self.dim,
            "modulus": self.modulus,
            "images": [[list(r) for r in k] for k in self.images],
        }

    def key_to_json(self, key):
        return [list(r) for r in key]

    def key_from_json(self, data):
        key = tuple(tuple(int(x) for x in row) for row in data)
        self.validate_key(key)
        return key


class CyclicModel(GroupModel):
    """Z/n with one generator; keys are residues composed additively.

    This is the 1x1 modular-matrix stand-in for finite cyclic groups: the
    generator acts as the cyclic shift and all the matrix machinery
    degenerates to residue arithmetic.
    """

    def __init__(self, n: int):
        if n < 2:
            raise ValueError("cyclic order must be >= 2")
        self.n = n
        self.n_generators = 1
        self.model_id = f"cyclic:{n}"

    def identity(self) -> GroupElement:
        return self._wrap(0)

    def generator(self, i: int) -> GroupElement:
        if i != 0:
            raise ValueError("cyclic model has a single generator")
        return self._wrap(1 % self.n)

    def multiply(self, a: GroupElement, b: GroupElement) -> GroupElement:
        return self._wrap((a.key + b.key) % self.n)

    def inverse(self, a: GroupElement) -> GroupElement:
        return self._wrap((-a.key) % self.n)

    def validate_key(self, key) -> None:
        if not isinstance(key, int) or not 0 <= key < self.n:
            raise ValueError(f"invalid residue {key!r} mod {self.n}")

    def spec(self) -> dict:
        return {"type": "cyclic", "n": self.n}

    def key_to_json(self, key):
        return key

    def key_from_json(self, data):
        key = int(data)
        self.validate_key(key)
        return key


class FreeModel(GroupModel):
    """Normal form is the freely reduced word itself.

    Sound only when free reduction solves the word problem, i.e. for free
    groups.  Downstream consumers refuse unsound instances.
    """

    def __init__(self, n_generators: int, sound: bool = True):
        if n_generators < 1:
            raise ValueError("need at least one generator")
        self.n_generators = n_generators
        self.sound = sound
        self.model_id = f"free:{n_generators}:{'sound' if sound else 'unsound'}"

    def identity(self) -> GroupElement:
        return self._wrap(())

    def generator(self, i: int) -> GroupElement:
        if not 0 <= i < self.n_generators:
            raise ValueError("generator index out of range")
        return self._wrap((i + 1,))

    def multiply(self, a: GroupElement, b: GroupElement) -> GroupElement:
        out = list(a.key)
        for x in b.key:
            if out and out[-1] == -x:
                out.pop()
            else:
                out.append(x)
        return self._wrap(tuple(out))

    def inverse(self, a: GroupElement) -> GroupElement:
        return self._wrap(tuple(-x for x in reversed(a.key)))

    def validate_key(self, key) -> None:
        for x in key:
            if not isinstance(x, int) or x == 0 or abs(x) > self.n_generators:
                raise ValueError(f"invalid letter {x!r} in free key")
        for a, b in zip(key, key[1:]):
            if a == -b:
                raise ValueError("free key is not freely reduced")

    def spec(self) -> dict:
        return {"type": "free", "generators": self.n_generators, "sound": self.sound}

    def key_to_json(self, key):
        return list(key)

    def key_from_json(self, data):
        key = tuple(int(x) for x in data)
        self.validate_key(key)
        return key


def model_from_spec(spec: dict) -> GroupModel:
    kind = spec.get("type")
    if kind == "matrix":
        return MatrixModel(spec["images"])
    if kind == "modular":
        return ModularMatrixModel(spec["images"], spec["modulus"])
    if kind == "cyclic":
        return CyclicModel(spec["n"])
    if kind == "free":
        return FreeModel(spec["generators"], spec.get("sound", True))
    raise ValueError(f"unknown model spec type {kind!r}")


def validate_model(p: Presentation, model: GroupModel) -> None:
    """Check the model is consistent with the presentation's relators."""
    if p.n_generators != model.n_generators:
        raise InconsistentModelError(
            f"presentation has {p.n_generators} generators, model has {model.n_generators}"
        )
    if isinstance(model, FreeModel):
        if p.relators and model.sound:
            raise InconsistentModelError(
                "free model marked sound but the presentation has relators"
            )
        return
    ident = model.identity()
    for label, rel in zip(p.labels, p.relators):
        if model.evaluate(rel) != ident:
            raise InconsistentModelError(
                f"relator {label} does not evaluate to the identity"
            )


class ProductTable:
    """Products x^-1 y over a support basis.

    pair_elements enumerates the distinct products in first-seen order
    (x-major, then y); pid[x][y] is the index of E[x]^-1 E[y] in that
    enumeration and inverse_pid maps each product to its inverse's index.
    """

    __slots__ = ("pair_elements", "pair_index", "pid", "inverse_pid", "identity_pid")

    def __init__(self, basis: "SupportBasis"):
        model = basis.model
        inverses = [model.inverse(el) for el in basis.elements]
        pair_elements: List[GroupElement] = []
        pair_index: dict = {}
        m = len(basis)
        pid = [[0] * m for _ in range(m)]
        for x in range(m):
            inv_x = inverses[x]
            for y in range(m):
                g = model.multiply(inv_x, basis.elements[y])
                p = pair_index.get(g.key)
                if p is None:
                    p = len(pair_elements)
                    pair_index[g.key] = p
                    pair_elements.append(g)
                pid[x][y] = p
        self.pair_elements = pair_elements
        self.pair_index = pair_index
        self.pid = pid
        self.inverse_pid = [
            pair_index[model.inverse(g).key] for g in pair_elements
        ]
        self.identity_pid = pair_index[model.identity().key]

    def __len__(self):
        return len(self.pair_elements)


class SupportBasis:
    """Ordered, inversion-closed list of distinct elements; identity first."""

    __slots__ = ("model", "elements", "index", "radius", "_products")

    def __init__(self, elements: Sequence[GroupElement], radius: Optional[int] = None):
        elements = list(elements)
        if not elements:
            raise ValueError("support basis must be nonempty")
        self.model = elements[0].model
        ident = self.model.identity()
        if elements[0] != ident:
            raise ValueError("support basis must start with the identity")
        self.index = {}
        for pos, el in enumerate(elements):
            if el.key in self.index:
                raise ValueError(f"duplicate element {el.key!r} in support basis")
            self.index[el.key] = pos
        for el in elements:
            if self.model.inverse(el).key not in self.index:
                raise ValueError("support basis is not closed under inversion")
        self.elements = tuple(elements)
        self.radius = radius
        self._products = None

    def products(self) -> ProductTable:
        if self._products is None:
            self._products = ProductTable(self)
        return self._products

    def __len__(self):
        return len(self.elements)

    def __iter__(self):
        return iter(self.elements)

    def position(self, element: GroupElement) -> Optional[int]:
        return self.index.get(element.key)

    def to_json(self) -> dict:
        return {
            "model": self.model.spec(),
            "radius": self.radius,
            "keys": [self.model.key_to_json(el.key) for el in self.elements],
        }

    @classmethod
    def from_json(cls, data: dict) -> "SupportBasis":
        model = model_from_spec(data["model"])
        elements = [
            GroupElement(model, model.key_from_json(k)) for k in data["keys"]
        ]
        return cls(elements, data.get("radius"))


def symmetrized_generators(model: GroupModel) -> List[GroupElement]:
    """Generators and their inverses, deduplicated, in generator order."""
    out: List[GroupElement] = []
    seen = set()
    for i in range(model.n_generators):
        g = model.generator(i)
        for el in (g, model.inverse(g)):
            if el.key not in seen:
                seen.add(el.key)
                out.append(el)
    return out


def ball(model: GroupModel, radius: int) -> SupportBasis:
    """Metric ball of the given radius, in deterministic BFS order."""
    if radius < 0:
        raise ValueError("radius must be >= 0")
    if isinstance(model, FreeModel) and not model.sound:
        raise ValueError("refusing to enumerate a ball for an unsound free model")
    gens = symmetrized_generators(model)
    ident = model.identity()
    order: dict = {ident.key: ident}
    frontier = [ident]
    for _ in range(radius):
        nxt = []
        for el in frontier:
            for s in gens:
                prod = model.multiply(el, s)
                if prod.key not in order:
                    order[prod.key] = prod
                    nxt.append(prod)
        if not nxt:
            break
        frontier = nxt
    elements = list(order.values())
    # Symmetrized BFS balls are already inversion closed; the pass guards
    # against future model quirks without disturbing the order.
    for el in elements:
        inv = model.inverse(el)
        if inv.key not in order:
            order[inv.key] = inv
            elements.append(inv)
    return SupportBasis(elements, radius)
