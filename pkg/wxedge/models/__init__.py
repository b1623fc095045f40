"""
Pydantic models for wxedge scenes, world states, rules, agents and reports.
"""

from .agent import *
from .common import *
from .perception import *
from .records import *
from .rules import *
from .scene import *
from .world import *
