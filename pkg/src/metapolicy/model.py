"""Self-contained reflective object model.

Named types with fields, methods and supertypes live in per-node registries;
objects live in per-node heaps addressed by (node, id) references.  Nothing
here touches Python's own reflection, so every simulation step is
deterministic and replayable.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Optional, Sequence, Union

from .errors import (
    AbstractInstantiation,
    CyclicSupertype,
    DanglingRef,
    DuplicateType,
    FieldTypeMismatch,
    MissingField,
    MovedObject,
    UnknownType,
)

CONCRETE = "concrete"
INTERFACE = "interface"
PRIMITIVE = "primitive"
ARRAY = "array"

# Fixed payload widths (bytes) for packable primitives; "string" and "bytes"
# are variable-width and therefore not base64-packable.
PRIMITIVE_SIZES = {
    "boolean": 1,
    "byte": 1,
    "char": 2,
    "short": 2,
    "int": 4,
    "float": 4,
    "long": 8,
    "double": 8,
}

VARIABLE_PRIMITIVES = ("string", "bytes")

# Reserved metatype: instances carry a type name and stand in for class
# objects crossing the wire.
CLASS_TYPE = "Class"

# Reserved type under which remote-reference stand-ins live on a heap.
PROXY_TYPE = "__Proxy"


@dataclass(frozen=True)
class MethodSig:
    name: str
    param_types: tuple[str, ...]
    return_type: str

    @property
    def arity(self) -> int:
        return len(self.param_types)


@dataclass(frozen=True)
class TypeDescriptor:
    """A named type: fully-qualified name, kind, fields, methods, supertypes.

    Field order is canonical: it fixes the encoding order on the wire.
    """

    name: str
    kind: str = CONCRETE
    fields: tuple[tuple[str, str], ...] = ()
    methods: tuple[MethodSig, ...] = ()
    supertypes: tuple[str, ...] = ()

    def __post_init__(self):
        if self.kind not in (CONCRETE, INTERFACE, PRIMITIVE, ARRAY):
            raise UnknownType(f"bad type kind {self.kind!r}")
        names = [n for n, _ in self.fields]
        if len(set(names)) != len(names):
            raise DuplicateType(f"duplicate field name in {self.name}")
        if self.kind in (PRIMITIVE, ARRAY) and (self.fields or self.methods):
            raise FieldTypeMismatch(
                f"{self.kind} type {self.name} cannot declare fields or methods")

    @property
    def package(self) -> str:
        return self.name.rsplit(".", 1)[0] if "." in self.name else ""

    @property
    def simple_name(self) -> str:
        return self.name.rsplit(".", 1)[-1]

    def field_type(self, field_name: str) -> str:
        for n, t in self.fields:
            if n == field_name:
                return t
        raise MissingField(f"{self.name} has no field {field_name!r}")

    def method(self, name: str) -> Optional[MethodSig]:
        for m in self.methods:
            if m.name == name:
                return m
        return None


def _builtin_descriptors() -> list[TypeDescriptor]:
    prims = list(PRIMITIVE_SIZES) + list(VARIABLE_PRIMITIVES)
    out = [TypeDescriptor(p, kind=PRIMITIVE) for p in prims]
    out.append(TypeDescriptor(CLASS_TYPE, kind=CONCRETE, fields=(("name", "string"),)))
    out.append(TypeDescriptor(PROXY_TYPE, kind=CONCRETE))
    return out


def array_of(element_type: str) -> str:
    return element_type + "[]"


def element_type_of(array_name: str) -> Optional[str]:
    return array_name[:-2] if array_name.endswith("[]") else None


class TypeRegistry:
    """Closed-world set of type descriptors with a nominal subtype order.

    Names may deliberately dangle (a node can reference a type it has never
    seen); resolution of such names fails only at the point of use.
    """

    def __init__(self):
        self._types: dict[str, TypeDescriptor] = {}
        # reflexive-transitive supertype closure, per type name
        self._supers: dict[str, frozenset[str]] = {}
        for d in _builtin_descriptors():
            self.register(d)

    def __contains__(self, name: str) -> bool:
        if name.endswith("[]"):
            return element_type_of(name) in self
        return name in self._types

    def names(self) -> Iterable[str]:
        return self._types.keys()

    def register(self, d: TypeDescriptor) -> None:
        if d.name in self._types:
            raise DuplicateType(d.name)
        if d.name in d.supertypes:
            raise CyclicSupertype(f"{d.name} lists itself as a supertype")
        reach: set[str] = set()
        stack = list(d.supertypes)
        while stack:
            s = stack.pop()
            if s in reach:
                continue
            reach.add(s)
            if s in self._supers:
                reach |= self._supers[s]
        if d.name in reach:
            raise CyclicSupertype(f"{d.name} reaches itself via supertypes")
        self._types[d.name] = d
        self._supers[d.name] = frozenset({d.name} | reach)
        # types that forward-declared this name now gain its ancestors
        for t, closure in list(self._supers.items()):
            if t != d.name and d.name in closure:
                self._supers[t] = closure | self._supers[d.name]

    def lookup(self, name: str) -> TypeDescriptor:
        elem = element_type_of(name)
        if elem is not None:
            self.lookup(elem)
            return TypeDescriptor(name, kind=ARRAY)
        d = self._types.get(name)
        if d is None:
            raise UnknownType(name)
        return d

    def get(self, name: str) -> Optional[TypeDescriptor]:
        try:
            return self.lookup(name)
        except UnknownType:
            return None

    def is_subtype(self, sub: str, sup: str) -> bool:
        """Reflexive-transitive nominal subtyping over declared supertypes."""
        if sub == sup:
            return True
        sub_e, sup_e = element_type_of(sub), element_type_of(sup)
        if sub_e is not None and sup_e is not None:
            return self.is_subtype(sub_e, sup_e)
        closure = self._supers.get(sub)
        return closure is not None and sup in closure

    def effective_methods(self, name: str) -> dict[str, MethodSig]:
        """Declared plus inherited methods; a subtype's declaration wins."""
        out: dict[str, MethodSig] = {}
        seen: set[str] = set()
        stack = [name]
        while stack:
            n = stack.pop(0)
            if n in seen:
                continue
            seen.add(n)
            d = self._types.get(n)
            if d is None:
                continue
            for m in d.methods:
                out.setdefault(m.name, m)
            stack.extend(d.supertypes)
        return out

    def structurally_compatible(self, impl: str, view: str) -> bool:
        """True iff an object typed `impl` can honestly be viewed as `view`.

        Every method of the view must exist on the implementation with the
        same name and arity, contravariant parameters and a covariant return.
        Field requirements of the view are ignored: a view exposes behaviour.
        Mutually recursive types terminate via an assumed-pairs set.
        """
        if impl not in self or view not in self:
            raise UnknownType(impl if impl not in self else view)
        return self._compat(impl, view, set())

    def _compat(self, impl: str, view: str, assumed: set[tuple[str, str]]) -> bool:
        if impl == view or self.is_subtype(impl, view):
            return True
        if (impl, view) in assumed:
            return True
        ie, ve = element_type_of(impl), element_type_of(view)
        if (ie is None) != (ve is None):
            return False
        if ie is not None:
            return self._compat(ie, ve, assumed | {(impl, view)})
        di, dv = self._types.get(impl), self._types.get(view)
        if di is None or dv is None:
            return False
        if PRIMITIVE in (di.kind, dv.kind):
            return di.name == dv.name
        assumed = assumed | {(impl, view)}
        impl_methods = self.effective_methods(impl)
        for req in self.effective_methods(view).values():
            got = impl_methods.get(req.name)
            if got is None or got.arity != req.arity:
                return False
            for want, have in zip(req.param_types, got.param_types):
                if not self._compat(want, have, assumed):
                    return False
            if not self._compat(got.return_type, req.return_type, assumed):
                return False
        return True


# --- values ---


@dataclass(frozen=True)
class ObjRef:
    node_id: str
    object_id: int
    type_name: str


class Value:
    """Marker base for the four value shapes."""

    __slots__ = ()


@dataclass(frozen=True)
class NullValue(Value):
    def __repr__(self):
        return "null"


NULL = NullValue()


@dataclass(frozen=True)
class PrimValue(Value):
    type_name: str
    payload: bytes


@dataclass(frozen=True)
class RefValue(Value):
    ref: ObjRef


@dataclass(frozen=True)
class ArrayValue(Value):
    element_type: str
    elements: tuple[Value, ...]

    @property
    def type_name(self) -> str:
        return array_of(self.element_type)


def v_int(n: int) -> PrimValue:
    return PrimValue("int", struct.pack(">i", n))


def v_long(n: int) -> PrimValue:
    return PrimValue("long", struct.pack(">q", n))


def v_double(x: float) -> PrimValue:
    return PrimValue("double", struct.pack(">d", x))


def v_bool(b: bool) -> PrimValue:
    return PrimValue("boolean", b"\x01" if b else b"\x00")


def v_byte(n: int) -> PrimValue:
    return PrimValue("byte", struct.pack(">B", n & 0xFF))


def v_string(s: str) -> PrimValue:
    return PrimValue("string", s.encode("utf-8"))


def v_bytes(b: bytes) -> PrimValue:
    return PrimValue("bytes", b)


def v_class(type_name: str) -> PrimValue:
    # payload of the reserved metatype is the referenced type's name
    return PrimValue(CLASS_TYPE, type_name.encode("utf-8"))


def prim_to_python(v: PrimValue):
    if v.type_name == "int":
        return struct.unpack(">i", v.payload)[0]
    if v.type_name == "long":
        return struct.unpack(">q", v.payload)[0]
    if v.type_name == "double":
        return struct.unpack(">d", v.payload)[0]
    if v.type_name == "float":
        return struct.unpack(">f", v.payload)[0]
    if v.type_name == "boolean":
        return v.payload != b"\x00"
    if v.type_name == "byte":
        return v.payload[0]
    if v.type_name in ("string", CLASS_TYPE):
        return v.payload.decode("utf-8")
    return v.payload


# --- heap ---


@dataclass(frozen=True)
class Resident:
    pass


@dataclass(frozen=True)
class MovedTo:
    target: ObjRef


@dataclass(frozen=True)
class VisitingAt:
    target: ObjRef
    return_token: object


RESIDENT = Resident()

MoveState = Union[Resident, MovedTo, VisitingAt]


@dataclass(frozen=True)
class ProxyInfo:
    """Client-side stand-in for a remote object, with cached snapshots."""

    target: ObjRef
    view_type: str
    cached_fields: tuple[tuple[str, Value], ...] = ()
    cached_methods: tuple[tuple[str, Value], ...] = ()

    def cached_field(self, name: str) -> Optional[Value]:
        for n, v in self.cached_fields:
            if n == name:
                return v
        return None

    def cached_method(self, name: str) -> Optional[Value]:
        for n, v in self.cached_methods:
            if n == name:
                return v
        return None


@dataclass
class HeapEntry:
    descriptor: TypeDescriptor
    slots: dict[str, Value]
    move_state: MoveState = RESIDENT
    proxy: Optional[ProxyInfo] = None
    # refs elsewhere that forward to this object (kept so a second move can
    # update their pointers in place instead of growing a chain)
    forwarded_from: list[ObjRef] = field(default_factory=list)


class Heap:
    """One address space's objects.  Object ids are never reused."""

    def __init__(self, node_id: str, registry: TypeRegistry):
        self.node_id = node_id
        self.registry = registry
        self._objects: dict[int, HeapEntry] = {}
        self._next_id = 1

    def __len__(self):
        return len(self._objects)

    def __contains__(self, ref: ObjRef) -> bool:
        return ref.node_id == self.node_id and ref.object_id in self._objects

    def refs(self) -> list[ObjRef]:
        return [ObjRef(self.node_id, oid, e.descriptor.name)
                for oid, e in self._objects.items()]

    def _fresh_ref(self, type_name: str) -> ObjRef:
        ref = ObjRef(self.node_id, self._next_id, type_name)
        self._next_id += 1
        return ref

    def conforms(self, value: Value, declared: str) -> bool:
        decl = self.registry.get(declared)
        if isinstance(value, NullValue):
            return decl is None or decl.kind != PRIMITIVE
        if isinstance(value, PrimValue):
            return decl is None or value.type_name == declared
        if isinstance(value, ArrayValue):
            if decl is None:
                return True
            elem = element_type_of(declared)
            return elem is not None and all(self.conforms(e, elem) for e in value.elements)
        if isinstance(value, RefValue):
            if decl is None:
                return True
            actual = value.ref.type_name
            if actual not in self.registry or decl.kind == PRIMITIVE:
                return actual == declared
            if self.registry.is_subtype(actual, declared):
                return True
            try:
                return self.registry.structurally_compatible(actual, declared)
            except UnknownType:
                return False
        return False

    def allocate(self, type_name: str, field_values: Mapping[str, Value]) -> ObjRef:
        d = self.registry.lookup(type_name)
        if d.kind != CONCRETE:
            raise AbstractInstantiation(f"cannot instantiate {d.kind} type {type_name}")
        slots: dict[str, Value] = {}
        for fname, ftype in d.fields:
            if fname not in field_values:
                raise MissingField(f"{type_name}.{fname} not supplied")
            v = field_values[fname]
            if not self.conforms(v, ftype):
                raise FieldTypeMismatch(
                    f"{type_name}.{fname} expects {ftype}, got {v!r}")
            slots[fname] = v
        extra = set(field_values) - {n for n, _ in d.fields}
        if extra:
            raise MissingField(f"{type_name} has no field(s) {sorted(extra)}")
        ref = self._fresh_ref(type_name)
        self._objects[ref.object_id] = HeapEntry(d, slots)
        return ref

    def allocate_shell(self, type_name: str) -> ObjRef:
        """Allocate with all-null slots; used to materialize cyclic graphs."""
        d = self.registry.lookup(type_name)
        if d.kind != CONCRETE:
            raise AbstractInstantiation(type_name)
        ref = self._fresh_ref(type_name)
        self._objects[ref.object_id] = HeapEntry(d, {n: NULL for n, _ in d.fields})
        return ref

    def allocate_proxy(self, info: ProxyInfo) -> ObjRef:
        ref = self._fresh_ref(PROXY_TYPE)
        self._objects[ref.object_id] = HeapEntry(
            self.registry.lookup(PROXY_TYPE), {}, proxy=info)
        return ref

    def entry(self, ref: ObjRef) -> HeapEntry:
        if ref.node_id != self.node_id:
            raise DanglingRef(f"{ref} does not live on node {self.node_id}")
        e = self._objects.get(ref.object_id)
        if e is None:
            raise DanglingRef(f"{ref} is gone")
        return e

    def proxy_info(self, ref: ObjRef) -> Optional[ProxyInfo]:
        e = self.entry(ref)
        return e.proxy

    def get_field(self, ref: ObjRef, name: str) -> Value:
        e = self.entry(ref)
        if name not in e.slots:
            raise MissingField(f"{ref.type_name}.{name}")
        return e.slots[name]

    def set_field(self, ref: ObjRef, name: str, value: Value) -> None:
        e = self.entry(ref)
        ftype = e.descriptor.field_type(name)
        if not self.conforms(value, ftype):
            raise FieldTypeMismatch(f"{ref.type_name}.{name} expects {ftype}")
        e.slots[name] = value

    def mark_moved(self, ref: ObjRef, new_home: ObjRef) -> None:
        e = self.entry(ref)
        if isinstance(e.move_state, MovedTo):
            raise MovedObject(f"{ref} already moved")
        e.move_state = MovedTo(new_home)
        e.slots = {}

    def mark_visiting(self, ref: ObjRef, target: ObjRef, token) -> None:
        e = self.entry(ref)
        e.move_state = VisitingAt(target, token)

    def restore_resident(self, ref: ObjRef, slots: dict[str, Value]) -> None:
        e = self.entry(ref)
        e.move_state = RESIDENT
        e.slots = dict(slots)

    def delete(self, ref: ObjRef) -> None:
        self.entry(ref)
        del self._objects[ref.object_id]


# imported late to keep the module header focused on the happy path
from .errors import MovedObject  # noqa: E402


def closure_refs(heaps: Mapping[str, Heap], root: Value) -> list[ObjRef]:
    """All object refs reachable from `root`, each once, discovery order.

    Follows move forwarding so a forwarded-resolvable root still walks; stops
    at proxies (their state is remote).
    """
    out: list[ObjRef] = []
    seen: set[ObjRef] = set()
    stack: list[Value] = [root]
    while stack:
        v = stack.pop()
        if isinstance(v, ArrayValue):
            stack.extend(reversed(v.elements))
        elif isinstance(v, RefValue):
            ref = v.ref
            if ref in seen:
                continue
            seen.add(ref)
            out.append(ref)
            heap = heaps.get(ref.node_id)
            if heap is None:
                raise DanglingRef(str(ref))
            e = heap.entry(ref)
            if e.proxy is not None:
                continue
            if isinstance(e.move_state, (MovedTo, VisitingAt)):
                stack.append(RefValue(e.move_state.target))
                continue
            for _, fv in sorted(e.slots.items()):
                stack.append(fv)
    return out


def _payload_bytes(v: Value) -> int:
    if isinstance(v, PrimValue):
        return len(v.payload)
    if isinstance(v, ArrayValue):
        return sum(_payload_bytes(e) for e in v.elements)
    return 0


def closure_size(heaps: Mapping[str, Heap], root: Value) -> int:
    """Total primitive payload bytes over the reachable closure.

    Aliased and cyclic objects are counted once; inline payloads hanging off
    the root value itself are included.
    """
    total = _payload_bytes(root) if not isinstance(root, RefValue) else 0
    for ref in closure_refs(heaps, root):
        heap = heaps[ref.node_id]
        e = heap.entry(ref)
        if e.proxy is not None or isinstance(e.move_state, (MovedTo, VisitingAt)):
            continue
        for fv in e.slots.values():
            total += _payload_bytes(fv)
    return total
