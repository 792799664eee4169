"""
probelb - load balancing with job-size testing.

Closed-form evaluation, design rules, optimisation and discrete-event
simulation of a testing scheduler that feeds N FCFS servers under a
cutoff dispatching rule.
"""

__version__ = "0.1.0"
