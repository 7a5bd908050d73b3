"""Flux aléatoires indexés.

Chaque lot Monte-Carlo tire ses nombres d'un générateur dérivé de
(seed, point, lot) : le résultat ne dépend ni de l'ordre d'exécution ni du
nombre de workers.
"""

from __future__ import annotations

import numpy as np

SEED_MAX = 2**64


def stream_rng(seed: int, *key: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(entropy=int(seed), spawn_key=tuple(int(k) for k in key)))
