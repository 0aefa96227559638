from __future__ import annotations

import json
import random
from pathlib import Path

import pytest

from dialogforge import Dialog, Event

FIXTURES = Path(__file__).parent / "fixtures"


@pytest.fixture
def star_root() -> Path:
    return FIXTURES / "star"


@pytest.fixture
def runner():
    from click.testing import CliRunner

    return CliRunner()


def random_dialog(rng: random.Random, plain_safe: bool = True) -> Dialog:
    """A random valid Dialog: consistent turn/event pairing, random metadata.

    With plain_safe (the default) speakers and texts stay representable in
    the plain format (single line, no ': ' in speakers).
    """
    speakers = rng.sample(["Alice", "Bob", "Carol", "Dave", "Support agent"], k=2)
    words = ["hello", "refund", "coffee", "sure", "précisément", "ok?", "no.", "…"]
    dialog = Dialog(
        id=rng.choice([None, rng.randrange(1000)]),
        model=rng.choice([None, "scripted", "test-model"]),
        seed=rng.choice([None, rng.randrange(2**31)]),
        scenario=rng.choice([None, {"topic": "coffee order", "location": "cafe"}]),
        personas=rng.choice([None, {"Alice": {"name": "Alice", "role": "barista"}}]),
    )
    ts = 0
    for i in range(rng.randrange(0, 8)):
        text = " ".join(rng.choice(words) for _ in range(rng.randrange(0, 5)))
        if not plain_safe and rng.random() < 0.3:
            text += "\nsecond line"
        if rng.random() < 0.25:
            dialog = dialog.append_event(
                Event(
                    agent=speakers[i % 2],
                    action="instruct",
                    action_label="TestOrchestrator",
                    text="do something specific",
                    timestamp=ts,
                )
            )
            ts += 1
        dialog = dialog.append_utterance(speakers[i % 2], text, ts)
        ts += rng.randrange(0, 3)
    return dialog
