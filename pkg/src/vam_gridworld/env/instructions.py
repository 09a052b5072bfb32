"""
Templated goal statements and step instructions over a closed vocabulary.

Templates are whitespace-tokenised; a comma is its own token. Every token a
template can produce is listed in ``vocab.txt`` next to this module.
"""

from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from vam_gridworld.common.errors import ContractError
from vam_gridworld.env.task import Subgoal, TaskSpec
from vam_gridworld.env.world import World

PAD, SEP = '<pad>', '<sep>'
VOCAB_PATH = Path(__file__).parent / 'vocab.txt'

GOAL_TEMPLATES: Dict[str, Tuple[str, ...]] = {
    'pick_and_place': (
        'put the {obj} on the {place}',
        'place the {obj} on the {place}',
        'move the {obj} to the {place}',
    ),
    'pick_heat_place': (
        'put a heated {obj} on the {place}',
        'heat the {obj} and place it on the {place}',
        'warm up the {obj} then put it on the {place}',
    ),
    'pick_cool_place': (
        'put a cold {obj} on the {place}',
        'chill the {obj} and place it on the {place}',
        'cool the {obj} then put it on the {place}',
    ),
    'pick_clean_place': (
        'put a clean {obj} on the {place}',
        'wash the {obj} and place it on the {place}',
        'rinse the {obj} then put it on the {place}',
    ),
    'slice_and_place': (
        'slice the {obj} and put the knife on the {place}',
        'cut the {obj} then place the knife on the {place}',
        'use the knife to slice the {obj} and leave it on the {place}',
    ),
    'look_at_in_light': (
        'examine the {obj} under the {light}',
        'look at the {obj} in the light of the {light}',
        'hold the {obj} and turn on the {light}',
    ),
}

STEP_TEMPLATES: Dict[str, Tuple[str, ...]] = {
    'GotoLocation': (
        'go to the {target}',
        'head to the {target}',
        'walk over to the {target}',
    ),
    'PickupObject': (
        'pick up the {target}',
        'grab the {target}',
        'take the {target}',
    ),
    'PutObject': (
        'put the {target} on the {receptacle}',
        'place the {target} on the {receptacle}',
        'set the {target} down on the {receptacle}',
    ),
    'CleanObject': (
        'clean the {target} in the {receptacle}',
        'wash the {target} in the {receptacle}',
        'rinse the {target} in the {receptacle}',
    ),
    'HeatObject': (
        'heat the {target} in the {receptacle}',
        'warm the {target} using the {receptacle}',
        'cook the {target} with the {receptacle}',
    ),
    'CoolObject': (
        'cool the {target} in the {receptacle}',
        'chill the {target} in the {receptacle}',
        'put the {target} in the {receptacle} to cool it',
    ),
    'SliceObject': (
        'slice the {target}',
        'cut the {target}',
        'cut up the {target} with the knife',
    ),
    'ToggleObject': (
        'turn on the {target}',
        'switch on the {target}',
        'power on the {target}',
    ),
}

ROUTE_PHRASES: Dict[str, str] = {
    'TurnLeft': 'turn left',
    'TurnRight': 'turn right',
    'LookUp': 'look up',
    'LookDown': 'look down',
}

NUMBER_WORDS = ('one', 'two', 'three', 'four', 'five', 'six', 'seven', 'eight', 'nine')


class Vocabulary:
    """Closed token list; index 0 is padding."""

    def __init__(self, tokens: Sequence[str]):
        if len(set(tokens)) != len(tokens):
            raise ContractError("Vocabulary contains duplicate tokens")
        if not tokens or tokens[0] != PAD or SEP not in tokens:
            raise ContractError(f"Vocabulary must start with {PAD} and contain {SEP}")
        self.tokens: Tuple[str, ...] = tuple(tokens)
        self.index: Dict[str, int] = {t: i for i, t in enumerate(self.tokens)}

    def __len__(self) -> int:
        return len(self.tokens)

    def __contains__(self, token: str) -> bool:
        return token in self.index

    @property
    def pad_id(self) -> int:
        return self.index[PAD]

    @property
    def sep_id(self) -> int:
        return self.index[SEP]

    def encode(self, tokens: Sequence[str]) -> List[int]:
        """
        Raises:
            ContractError: If a token is not in the vocabulary.
        """
        missing = [t for t in tokens if t not in self.index]
        if missing:
            raise ContractError(f"Out-of-vocabulary tokens: {sorted(set(missing))}")
        return [self.index[t] for t in tokens]

    def decode(self, ids: Sequence[int]) -> List[str]:
        return [self.tokens[i] for i in ids]


def load_vocabulary(path: Optional[Path] = None) -> Vocabulary:
    """Read a newline-delimited vocabulary file (blank lines ignored)."""
    text = Path(path or VOCAB_PATH).read_text(encoding='utf-8')
    return Vocabulary([line.strip() for line in text.splitlines() if line.strip()])


def _name(world: World, object_id: Optional[int]) -> str:
    return world.object(object_id).traits.token if object_id is not None else ''


def route_tokens(route: Sequence[str]) -> List[str]:
    """Phrase a navigation leg; runs of MoveForward collapse into counted steps."""
    phrases: List[str] = []
    i = 0
    while i < len(route):
        if route[i] == 'MoveForward':
            run = 1
            while i + run < len(route) and route[i + run] == 'MoveForward':
                run += 1
            i += run
            while run > 0:
                chunk = min(run, len(NUMBER_WORDS))
                phrases.append(f"walk forward {NUMBER_WORDS[chunk - 1]} {'step' if chunk == 1 else 'steps'}")
                run -= chunk
        else:
            phrases.append(ROUTE_PHRASES[route[i]])
            i += 1
    return ' , '.join(phrases).split()


def _goal_slots(task: TaskSpec, world: World) -> Dict[str, str]:
    by_type = {}
    for sg in task.subgoals:
        by_type.setdefault(sg.subgoal_type, sg)
    main = by_type.get('SliceObject') or by_type.get('PickupObject') or task.subgoals[0]
    put = by_type.get('PutObject')
    toggle = by_type.get('ToggleObject')
    return {
        'obj': _name(world, main.target),
        'place': _name(world, put.receptacle if put else None),
        'light': _name(world, toggle.target if toggle else None),
    }


def step_tokens(subgoal: Subgoal, world: World, template: str) -> List[str]:
    tokens = template.format(target=_name(world, subgoal.target),
                             receptacle=_name(world, subgoal.receptacle)).split()
    if subgoal.subgoal_type == 'GotoLocation' and subgoal.route:
        tokens += [','] + route_tokens(subgoal.route)
    return tokens


def render_instructions(task: TaskSpec, world: World, seed: int) -> Tuple[List[str], List[List[str]]]:
    """
    Goal tokens and one token list per subgoal.

    Template choice is drawn from a generator seeded with ``seed``: the goal
    template first, then one per subgoal in order. ``world`` supplies the
    category names of the task's object ids.
    """
    rng = np.random.default_rng(seed)
    goal_bank = GOAL_TEMPLATES[task.task_type]
    goal = goal_bank[int(rng.integers(len(goal_bank)))].format(**_goal_slots(task, world)).split()
    steps = []
    for subgoal in task.subgoals:
        bank = STEP_TEMPLATES[subgoal.subgoal_type]
        steps.append(step_tokens(subgoal, world, bank[int(rng.integers(len(bank)))]))
    return goal, steps


def template_tokens() -> List[str]:
    """Literal words used by every template and route phrase, placeholders removed."""
    words = set()
    banks = list(GOAL_TEMPLATES.values()) + list(STEP_TEMPLATES.values()) + [tuple(ROUTE_PHRASES.values())]
    for bank in banks:
        for template in bank:
            words.update(w for w in template.split() if not w.startswith('{'))
    words.update(['walk', 'forward', 'step', 'steps', ','])
    words.update(NUMBER_WORDS)
    return sorted(words)
