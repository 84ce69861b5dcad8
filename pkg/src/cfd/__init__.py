"""Coordinated flaw disclosure toolkit: model cards, flaw reports, case
lifecycle, statistical verification, common-use tracking, a use-case registry,
and the event-sourced coordination service tying them together."""

from . import (  # noqa: F401
    canonical,
    cards,
    common_use,
    cue,
    errors,
    lifecycle,
    reports,
    verification,
)

__version__ = "0.1.0"
