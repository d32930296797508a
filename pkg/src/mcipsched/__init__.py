"""Makespan scheduling with setup times via module configuration IPs.

Approximation schemes for the setup-class, splittable and preemptive models,
built on an n-fold integer programming solver, with exact oracles and
validators for testing.
"""
from .driver import initial_bound, search
from .model import (MODELS, PREEMPTIVE, SETUP_CLASS, SPLITTABLE, AssignmentSchedule, Instance,
                    Job, Part, PreemptiveSchedule, SplitSchedule, TimedPart, TrivialRun,
                    free_space, makespan, validate)

__all__ = ["MODELS", "PREEMPTIVE", "SETUP_CLASS", "SPLITTABLE", "AssignmentSchedule",
           "Instance", "Job", "Part", "PreemptiveSchedule", "SplitSchedule", "TimedPart",
           "TrivialRun", "free_space", "initial_bound", "makespan", "search", "validate"]
