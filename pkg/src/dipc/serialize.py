"""JSON schemas for codebooks and protocol transcripts.

Documents carry a schema tag; loaders reject versions they do not know.
Float values round-trip exactly (json uses repr), so a saved codebook
reproduces the original decoder behavior bit for bit.
"""

from __future__ import annotations

import json

import numpy as np

from .channel import ChannelParams, PowerConstraints
from .di_code import DICodebook
from .dif_protocol import DIFTranscript

CODEBOOK_SCHEMA = "dipc-codebook/1"
TRANSCRIPT_SCHEMA = "dipc-transcript/1"


def channel_to_dict(params: ChannelParams) -> dict:
    return {
        "memory": params.memory,
        "hit_probs": [float(p) for p in params.hit_probs],
        "slot_duration": params.slot_duration,
        "dark_rate": params.dark_rate,
    }


def channel_from_dict(data: dict) -> ChannelParams:
    return ChannelParams(
        memory=data["memory"],
        hit_probs=np.asarray(data["hit_probs"], dtype=float),
        slot_duration=data["slot_duration"],
        dark_rate=data["dark_rate"],
    )


def codebook_to_dict(book: DICodebook) -> dict:
    return {
        "schema": CODEBOOK_SCHEMA,
        "channel": channel_to_dict(book.params),
        "power": {"peak": book.constraints.peak, "average": book.constraints.average},
        "packing_radius": book.packing_radius,
        "type1_budget": book.type1_budget,
        "type2_budget": book.type2_budget,
        "threshold": book.threshold,
        "codewords": [[float(v) for v in row] for row in book.codewords],
    }


def codebook_from_dict(data: dict) -> DICodebook:
    if data.get("schema") != CODEBOOK_SCHEMA:
        raise ValueError(f"unknown codebook schema {data.get('schema')!r}")
    return DICodebook(
        codewords=np.asarray(data["codewords"], dtype=float),
        params=channel_from_dict(data["channel"]),
        constraints=PowerConstraints(**data["power"]),
        packing_radius=data["packing_radius"],
        type1_budget=data["type1_budget"],
        type2_budget=data["type2_budget"],
        threshold=data["threshold"],
    )


def save_codebook(book: DICodebook, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(codebook_to_dict(book), fh, sort_keys=True, indent=2)
        fh.write("\n")


def load_codebook(path) -> DICodebook:
    with open(path, encoding="utf-8") as fh:
        return codebook_from_dict(json.load(fh))


def transcript_to_dict(transcript: DIFTranscript) -> dict:
    return {
        "schema": TRANSCRIPT_SCHEMA,
        "message": transcript.message,
        "blocks": [[int(v) for v in row] for row in transcript.blocks],
        "typical": transcript.typical,
        "hash_value": transcript.hash_value,
        "seed": transcript.seed,
    }


def transcript_from_dict(data: dict) -> DIFTranscript:
    if data.get("schema") != TRANSCRIPT_SCHEMA:
        raise ValueError(f"unknown transcript schema {data.get('schema')!r}")
    return DIFTranscript(
        message=data["message"],
        blocks=np.asarray(data["blocks"], dtype=np.int64),
        typical=data["typical"],
        hash_value=data["hash_value"],
        seed=data["seed"],
    )
