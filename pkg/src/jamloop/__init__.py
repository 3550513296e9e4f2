"""jamloop: a real-time MIDI looper with rule-derived drums and
call-and-response hybrid improvisation, speaking OSC on the wire."""

from .engine import Emission, EngineError, LooperEngine
from .improv import GeneratorKind, GeneratorRequest, GeneratorResponse, ImprovMachine, Phase
from .model import LiveNote, Mode, OutboundNote, PlayableNote, Tempo, TimeSignature, TrackKind
from .transport import LoopSpec

__all__ = [
    "Emission",
    "EngineError",
    "GeneratorKind",
    "GeneratorRequest",
    "GeneratorResponse",
    "ImprovMachine",
    "LiveNote",
    "LooperEngine",
    "LoopSpec",
    "Mode",
    "OutboundNote",
    "Phase",
    "PlayableNote",
    "Tempo",
    "TimeSignature",
    "TrackKind",
]

__version__ = "0.1.0"
