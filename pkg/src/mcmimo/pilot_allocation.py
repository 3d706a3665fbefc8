"""Per-cell exhaustive pilot assignment and decentralized best response.

Each cell scores every permutation of its own pilot-to-user mapping with
the other cells frozen, under one of four criteria (mean/worst BER,
mean/worst SINR), and adopts the best.  Cells update round robin; the
process stops when a full round changes nothing or the round cap hits.
A cell only moves on a strict improvement of its own criterion, so every
accepted move is monotone by construction.
"""

import csv
import itertools
import json
from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .asymptotics import identity_assignment, interferer_signs

MAX_USERS_EXHAUSTIVE = 8

CRITERION_CODES = {"minber": 0, "maxsinr": 1, "minimaxber": 2, "maxminsinr": 3}
_MAXIMIZING = {"maxsinr", "maxminsinr"}


def enumerate_permutations(num_users):
    """All pilot permutations in lexicographic order, identity first."""
    if num_users < 1:
        raise ValueError("need at least one user")
    if num_users > MAX_USERS_EXHAUSTIVE:
        raise ValueError(
            f"{num_users}! permutations is past the exhaustive-search guard "
            f"({MAX_USERS_EXHAUSTIVE}!); this size needs a heuristic allocator"
        )
    return np.array(
        list(itertools.permutations(range(num_users))), dtype=np.int64
    )


def _criterion_code(criterion):
    try:
        return CRITERION_CODES[criterion]
    except KeyError:
        raise ValueError(
            f"unknown criterion {criterion!r}; expected one of {sorted(CRITERION_CODES)}"
        ) from None


def _score_all(perms, criterion, cell, beta, gamma, phi, assign):
    signs = interferer_signs(beta.shape[0])
    return kernels.score_permutations(
        perms, beta, gamma, phi, assign, cell, _criterion_code(criterion), signs
    )


def evaluate_assignment(perm, criterion, cell, beta, gamma, phi, assign):
    """Criterion value of one candidate permutation for one cell.

    Raw value (mean or worst BER/SINR over the cell's users); the caller
    knows whether lower or higher is better.
    """
    perm = np.asarray(perm, dtype=np.int64)[None, :]
    return float(_score_all(perm, criterion, cell, beta, gamma, phi, assign)[0])


def allocate_cell(criterion, cell, beta, gamma, phi, assign):
    """Index of the best permutation for one cell, others frozen.

    Exhaustive argmin/argmax over all K! permutations; ties resolve to the
    lexicographically first optimum.
    """
    perms = enumerate_permutations(beta.shape[1])
    scores = _score_all(perms, criterion, cell, beta, gamma, phi, assign)
    if criterion in _MAXIMIZING:
        return int(np.argmax(scores))
    return int(np.argmin(scores))


@dataclass
class MoveRecord:
    round_index: int
    cell: int
    previous_score: float
    new_score: float
    accepted: bool
    potential: float


@dataclass
class RoundRecord:
    round_index: int
    changed_cells: int
    potential: float


@dataclass
class GameTrace:
    criterion: str
    rounds: list = field(default_factory=list)
    moves: list = field(default_factory=list)
    converged: bool = False

    @property
    def num_rounds(self):
        return len(self.rounds)


def _system_potential(criterion, beta, gamma, phi, assign):
    """System-wide mean BER (BER criteria) or minimum SINR (SINR criteria)."""
    alpha2 = kernels.pilot_alpha_sq(beta, gamma, assign)
    if criterion in ("minber", "minimaxber"):
        signs = interferer_signs(beta.shape[0])
        return float(
            kernels.ber_pilotwise(beta, phi, assign, alpha2, signs).mean()
        )
    return float(kernels.sinr_pilotwise(beta, phi, assign, alpha2).min())


def best_response_rounds(
    criterion, beta, gamma, phi, max_rounds=20, initial_assignment=None
):
    """Round-robin best response across cells until a quiet round.

    Returns the final assignment and a :class:`GameTrace` whose per-move
    records carry the system potential after the move.  Hitting the round
    cap is reported through ``trace.converged``, not an exception.
    """
    if max_rounds < 1:
        raise ValueError("need at least one round")
    _criterion_code(criterion)
    L, K, _ = beta.shape
    if initial_assignment is None:
        assign = identity_assignment(L, K)
    else:
        assign = np.array(initial_assignment, dtype=np.int64)
    perms = enumerate_permutations(K)
    maximizing = criterion in _MAXIMIZING
    trace = GameTrace(criterion=criterion)
    for rnd in range(1, max_rounds + 1):
        changed = 0
        for cell in range(L):
            scores = _score_all(perms, criterion, cell, beta, gamma, phi, assign)
            best = int(np.argmax(scores) if maximizing else np.argmin(scores))
            current = evaluate_assignment(
                assign[cell], criterion, cell, beta, gamma, phi, assign
            )
            improves = bool(
                scores[best] > current if maximizing else scores[best] < current
            )
            if improves:
                assign[cell] = perms[best]
                changed += 1
                new_score = float(scores[best])
            else:
                new_score = current
            trace.moves.append(
                MoveRecord(
                    round_index=rnd,
                    cell=cell,
                    previous_score=current,
                    new_score=new_score,
                    accepted=improves,
                    potential=_system_potential(criterion, beta, gamma, phi, assign),
                )
            )
        trace.rounds.append(
            RoundRecord(
                round_index=rnd,
                changed_cells=changed,
                potential=trace.moves[-1].potential,
            )
        )
        if changed == 0:
            trace.converged = True
            break
    return assign, trace


def assignment_to_dict(assign):
    """JSON-friendly cell -> pilot -> user mapping."""
    return {
        str(cell): {str(pilot): int(user) for pilot, user in enumerate(row)}
        for cell, row in enumerate(np.asarray(assign))
    }


def write_assignment_json(path, assign):
    with open(path, "w") as fh:
        json.dump(assignment_to_dict(assign), fh, indent=2, sort_keys=True)
        fh.write("\n")


def write_game_trace_csv(path, trace):
    """Per-move dump: round, cell, changed flag and system potential."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["round", "cell", "changed", "potential"])
        for move in trace.moves:
            writer.writerow(
                [
                    move.round_index,
                    move.cell,
                    int(move.accepted),
                    f"{move.potential:.10g}",
                ]
            )
