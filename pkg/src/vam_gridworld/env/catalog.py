"""Object categories, their traits, and the four room archetypes."""

from dataclasses import dataclass
from typing import Dict, Optional, Tuple

LOW, MID, HIGH = -1, 0, 1


@dataclass(frozen=True)
class CategoryTraits:
    name: str
    pickupable: bool = False
    surface: bool = False
    openable: bool = False
    toggleable: bool = False
    sliceable: bool = False
    heatable: bool = False
    coolable: bool = False
    cleanable: bool = False
    level: Optional[int] = None
    role: Optional[str] = None

    @property
    def token(self) -> str:
        return self.name.lower()

    @property
    def is_furniture(self) -> bool:
        return not self.pickupable


def _small(name: str, **traits) -> CategoryTraits:
    return CategoryTraits(name, pickupable=True, **traits)


def _furniture(name: str, level: int, **traits) -> CategoryTraits:
    return CategoryTraits(name, level=level, **traits)


_FOOD = dict(heatable=True, coolable=True)

CATEGORIES: Tuple[CategoryTraits, ...] = (
    _small('Apple', sliceable=True, cleanable=True, **_FOOD),
    _small('Bread', sliceable=True, **_FOOD),
    _small('Tomato', sliceable=True, cleanable=True, **_FOOD),
    _small('Potato', sliceable=True, cleanable=True, **_FOOD),
    _small('Lettuce', sliceable=True, cleanable=True, coolable=True),
    _small('Egg', **_FOOD),
    _small('Mug', cleanable=True, **_FOOD),
    _small('Cup', cleanable=True, **_FOOD),
    _small('Pan', cleanable=True, **_FOOD),
    _small('Plate', cleanable=True, **_FOOD),
    _small('Knife', cleanable=True, role='slicer'),
    _small('Sponge', cleanable=True),
    _small('Soap', cleanable=True),
    _small('Towel', cleanable=True),
    _small('Book'),
    _small('Pillow'),
    _small('Phone'),
    _small('Remote'),
    _small('Vase', cleanable=True),
    _small('Candle'),
    _furniture('Counter', MID, surface=True),
    _furniture('Table', MID, surface=True),
    _furniture('Shelf', HIGH, surface=True),
    _furniture('Sink', MID, surface=True, toggleable=True, role='clean'),
    _furniture('Fridge', MID, surface=True, openable=True, role='cool'),
    _furniture('Microwave', HIGH, surface=True, openable=True, toggleable=True, role='heat'),
    _furniture('Stove', MID, surface=True, toggleable=True, role='heat'),
    _furniture('Desk', MID, surface=True),
    _furniture('Bed', LOW, surface=True),
    _furniture('Sofa', LOW, surface=True),
    _furniture('Dresser', MID, surface=True),
    _furniture('Toilet', LOW, surface=True),
    _furniture('Bathtub', LOW, surface=True),
    _furniture('Lamp', HIGH, toggleable=True, role='light'),
)

CATEGORY_INDEX: Dict[str, int] = {c.name: i for i, c in enumerate(CATEGORIES)}
NUM_CATEGORIES = len(CATEGORIES)


def traits(category: str) -> CategoryTraits:
    return CATEGORIES[CATEGORY_INDEX[category]]


def is_start_surface(category: str) -> bool:
    """Receptacles small objects may start on: open surfaces that neither heat nor cool."""
    t = traits(category)
    return t.surface and not t.openable and t.role not in ('heat', 'cool')


def is_place_target(category: str) -> bool:
    """Receptacles a task may ask an object to end up on."""
    t = traits(category)
    return t.surface and not t.openable and t.role is None


@dataclass(frozen=True)
class Archetype:
    name: str
    furniture: Tuple[str, ...]
    small: Tuple[str, ...]
    tasks: Tuple[str, ...]


ARCHETYPES: Tuple[Archetype, ...] = (
    Archetype(
        'kitchen',
        furniture=('Counter', 'Table', 'Sink', 'Fridge', 'Microwave', 'Stove', 'Shelf'),
        small=('Apple', 'Bread', 'Tomato', 'Potato', 'Lettuce', 'Egg',
               'Mug', 'Cup', 'Pan', 'Plate', 'Knife', 'Sponge'),
        tasks=('pick_and_place', 'pick_heat_place', 'pick_cool_place',
               'pick_clean_place', 'slice_and_place'),
    ),
    Archetype(
        'bathroom',
        furniture=('Sink', 'Toilet', 'Bathtub', 'Shelf', 'Counter'),
        small=('Soap', 'Towel', 'Sponge', 'Cup', 'Candle', 'Vase'),
        tasks=('pick_and_place', 'pick_clean_place'),
    ),
    Archetype(
        'bedroom',
        furniture=('Bed', 'Desk', 'Dresser', 'Shelf', 'Lamp'),
        small=('Book', 'Pillow', 'Phone', 'Remote', 'Vase', 'Candle', 'Mug', 'Cup'),
        tasks=('pick_and_place', 'look_at_in_light'),
    ),
    Archetype(
        'living_room',
        furniture=('Sofa', 'Table', 'Shelf', 'Lamp', 'Dresser'),
        small=('Book', 'Pillow', 'Remote', 'Phone', 'Vase', 'Candle', 'Plate'),
        tasks=('pick_and_place', 'look_at_in_light'),
    ),
)
