"""Persona profiles, prompt compilation, and the two-agent turn-taking engine.

An Agent owns its conversation memory (first entry is always the compiled
system prompt), an ordered orchestrator chain, and a seeded RNG. Agents
are single-threaded: one agent must not take part in two dialogues at
once, but distinct agents may run distinct dialogues concurrently.
"""

from __future__ import annotations

import itertools
import random
from dataclasses import dataclass, replace
from typing import TYPE_CHECKING, Any, Callable

from .backends import Backend, Message, SamplingParams
from .dialog import Dialog, Event
from .errors import ConfigError, DuplicateAgentName, InvariantViolation
from .seeding import derive_seed, entropy_seed

if TYPE_CHECKING:
    from .orchestrators import Orchestrator

END_MARKER = "[END]"

ROLE_PLAY_PREAMBLE = (
    "You are playing a character in a role-play conversation with one other participant."
)

STAGE_DIRECTIONS = (
    "Always stay in character. Reply with exactly one utterance per turn, "
    "without narration or stage directions. When the conversation has run its "
    'course, reply with the end marker "{end_marker}" alone to finish it.'
)

# (attribute, prompt label) in fixed rendering order
_PERSONA_FIELDS = (
    ("name", "Name"),
    ("role", "Role"),
    ("background", "Background"),
    ("personality", "Personality"),
    ("circumstances", "Circumstances"),
    ("rules", "Rules"),
    ("language", "Language"),
)


@dataclass(frozen=True)
class Persona:
    """A named character profile compiled into a role-play system prompt."""

    name: str
    role: str | None = None
    background: str | None = None
    personality: str | None = None
    circumstances: str | None = None
    rules: str | None = None
    language: str | None = None

    def __post_init__(self):
        if not self.name.strip():
            raise InvariantViolation("persona name must be non-empty after trimming")

    def to_dict(self) -> dict[str, Any]:
        """Snapshot with every field present (None for unset); this is the
        shape embedded under ``personas`` in serialized dialogs."""
        return {attr: getattr(self, attr) for attr, _ in _PERSONA_FIELDS}

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> "Persona":
        known = {attr for attr, _ in _PERSONA_FIELDS}
        return cls(**{k: v for k, v in data.items() if k in known})


def persona_prompt(
    persona: Persona,
    end_marker: str = END_MARKER,
    extra_instructions: str | None = None,
) -> str:
    """Compile a persona into its system prompt.

    Deterministic: a fixed preamble, one labeled line per non-empty field
    in fixed order, then the fixed stage directions (and any extra
    instructions appended by the caller).
    """
    lines = [ROLE_PLAY_PREAMBLE, "", "Your character:"]
    for attr, label in _PERSONA_FIELDS:
        value = getattr(persona, attr)
        if value:
            lines.append(f"{label}: {value}")
    lines += ["", STAGE_DIRECTIONS.format(end_marker=end_marker)]
    if extra_instructions:
        lines.append(extra_instructions)
    return "\n".join(lines)


def _split_end_marker(utterance: str, marker: str) -> tuple[bool, str]:
    # "ends with (or equals) the marker" terminates; marker mid-text does not.
    stripped = utterance.rstrip()
    if stripped.endswith(marker):
        return True, stripped[: -len(marker)].rstrip()
    return False, utterance


class Agent:
    """Role-plays a persona against a completion backend.

    ``memory[0]`` is always the compiled system prompt. Orchestrators are
    queried in attachment order before every generated utterance; attach
    them with the ``|`` operator. A fixed ``first_utterance`` replaces the
    first generated move (no backend call, no orchestration for that move).
    """

    def __init__(
        self,
        backend: Backend,
        persona: Persona,
        name: str | None = None,
        first_utterance: str | None = None,
        seed: int | None = None,
        params: SamplingParams | None = None,
        end_marker: str = END_MARKER,
        extra_instructions: str | None = None,
    ):
        self.backend = backend
        self.persona = persona
        self.name = name if name is not None else persona.name
        self.first_utterance = first_utterance
        self.params = params if params is not None else SamplingParams()
        self.end_marker = end_marker
        self.orchestrators: list[Orchestrator] = []
        self._system_prompt = persona_prompt(persona, end_marker, extra_instructions)
        self.seed: int = 0
        self.rng: random.Random = random.Random()
        self.memory: list[Message] = []
        self.reset(seed)

    def __or__(self, orchestrator: "Orchestrator") -> "Agent":
        orchestrator.bind(self)
        self.orchestrators.append(orchestrator)
        return self

    def reset(self, seed: int | None = None) -> "Agent":
        """Clear memory back to the system prompt, reseed the RNG, and
        reset orchestrator state. A None seed draws fresh entropy."""
        self.seed = entropy_seed() if seed is None else seed
        self.rng = random.Random(self.seed)
        self.memory = [Message("system", self._system_prompt)]
        for orchestrator in self.orchestrators:
            orchestrator.reset()
        return self

    def respond(
        self,
        incoming: str | None,
        dialog: Dialog,
        clock: Callable[[], int] | None = None,
    ) -> tuple[str, list[Event]]:
        """Produce the agent's next utterance given the partner's last one.

        Queries each orchestrator in order; fired instructions are injected
        as system messages just before generation, emitted as instruct
        events, and (unless persistent) removed from memory afterwards.
        The utter event for the reply is the caller's job.
        """
        from .orchestrators import Instruction  # local import avoids a cycle

        now = clock if clock is not None else (lambda: 0)
        events: list[Event] = []
        ephemeral: list[Message] = []
        for orchestrator in self.orchestrators:
            fired = orchestrator.instruct(dialog, incoming)
            if fired is None:
                continue
            if not isinstance(fired, Instruction):
                fired = Instruction(
                    text=fired, persist=orchestrator.persist, label=orchestrator.name
                )
            message = Message("system", fired.text)
            self.memory.append(message)
            if not fired.persist:
                ephemeral.append(message)
            events.append(
                Event(
                    agent=self.name,
                    action="instruct",
                    action_label=fired.label or orchestrator.name,
                    text=fired.text,
                    timestamp=now(),
                )
            )
        if incoming is not None:
            self.memory.append(Message("user", incoming))
        params = self.params
        if params.seed is None:
            params = replace(params, seed=self.seed)
        reply = self.backend.complete(self.memory, params)
        self.memory.append(Message("assistant", reply))
        if ephemeral:
            self.memory = [m for m in self.memory if not any(m is e for e in ephemeral)]
        return reply, events

    def dialog_with(
        self,
        other: "Agent",
        id: int | None = None,
        seed: int | None = None,
        max_turns: int = 40,
    ) -> Dialog:
        """Run a strictly alternating conversation, this agent speaking first.

        Both agents are reset before the run and reseeded deterministically
        from the dialog seed and their position, so the whole run is a pure
        function of (backends, personas, orchestrator configs, seed). The
        dialog ends when an utterance ends with the end marker (stripped
        from the stored turn) or after ``max_turns`` turns. Event
        timestamps are a per-dialog monotone counter, keeping serialized
        output byte-stable across reruns.
        """
        if max_turns <= 0:
            raise ConfigError("max_turns must be positive")
        if self.name == other.name:
            raise DuplicateAgentName(f"both agents are named {self.name!r}")
        dialog_seed = entropy_seed() if seed is None else seed
        self.reset(derive_seed(dialog_seed, 0))
        other.reset(derive_seed(dialog_seed, 1))
        if self.backend.model == other.backend.model:
            model = self.backend.model
        else:
            model = f"{self.backend.model}+{other.backend.model}"
        dialog = Dialog(
            id=id,
            model=model,
            seed=dialog_seed,
            personas={
                self.name: self.persona.to_dict(),
                other.name: other.persona.to_dict(),
            },
        )
        ticker = itertools.count()
        clock = lambda: next(ticker)  # noqa: E731

        speaker, listener = self, other
        incoming: str | None = None
        for index in range(max_turns):
            if index == 0 and speaker.first_utterance is not None:
                raw, events = speaker.first_utterance, []
                speaker.memory.append(Message("assistant", raw))
            else:
                raw, events = speaker.respond(incoming, dialog, clock=clock)
            for event in events:
                dialog = dialog.append_event(event)
            ended, text = _split_end_marker(raw, speaker.end_marker)
            dialog = dialog.append_utterance(speaker.name, text, clock())
            if ended:
                break
            incoming = text
            speaker, listener = listener, speaker
        return dialog


def new_agent(
    backend: Backend,
    persona: Persona,
    name: str | None = None,
    first_utterance: str | None = None,
    seed: int | None = None,
) -> Agent:
    return Agent(backend, persona, name=name, first_utterance=first_utterance, seed=seed)
