"""Exception hierarchy shared by all metapolicy modules."""

from __future__ import annotations


class MiddlewareError(Exception):
    """Base class for every error raised by this package."""


# --- type model ---

class DuplicateType(MiddlewareError):
    pass


class CyclicSupertype(MiddlewareError):
    pass


class UnknownType(MiddlewareError):
    pass


class AbstractInstantiation(MiddlewareError):
    pass


class FieldTypeMismatch(MiddlewareError):
    pass


class MissingField(MiddlewareError):
    pass


class DanglingRef(MiddlewareError):
    pass


# --- pattern language ---

class PatternSyntax(MiddlewareError):
    pass


class DuplicateTag(PatternSyntax):
    pass


class AllNotAlone(PatternSyntax):
    pass


class UnknownTag(PatternSyntax):
    pass


# --- policy values ---

class DynamicChainOverflow(MiddlewareError):
    pass


class DeciderFailure(MiddlewareError):
    pass


class UnknownDecider(MiddlewareError):
    pass


# --- rule engine ---

class KindMismatch(MiddlewareError):
    pass


class NoActiveCall(MiddlewareError):
    pass


class UnknownHandle(MiddlewareError):
    pass


class NoApplicableRule(MiddlewareError):
    """The engine is policy-free: no rule matched, so no decision exists."""


# --- codec ---

class Base64OnNonPrimitiveArray(MiddlewareError):
    pass


class UnknownTransform(MiddlewareError):
    pass


class CachedMethodArity(MiddlewareError):
    pass


class UnknownClassRef(MiddlewareError):
    pass


class MalformedWire(MiddlewareError):
    pass


class TagOrderViolation(MalformedWire):
    pass


# --- simulator ---

class DuplicateNode(MiddlewareError):
    pass


class UnknownNode(MiddlewareError):
    pass


class StructuralMismatch(MiddlewareError):
    pass


class DuplicateService(MiddlewareError):
    pass


class UnknownService(MiddlewareError):
    pass


class AccessDenied(MiddlewareError):
    pass


class MethodNotFound(MiddlewareError):
    pass


class MovedObject(MiddlewareError):
    pass


class NetworkDown(MiddlewareError):
    pass


# --- scenario runner ---

class ScenarioSyntax(MiddlewareError):
    pass
