"""Virtual fish that learn, by tabular Q-learning, to steer a simulated school.

Modules, bottom up: ``geometry`` (viewport, cells, calibration),
``kinematics`` (first-order lag), ``fishsim`` (school behaviour model),
``env`` (the guidance MDP), ``rl`` (Q-table and learning loop),
``policies`` (fixed baselines), ``evaluation`` and ``stats`` (sweeps and
guidance statistics), ``vision`` (synthetic frames and tracking) and
``cli``. ``runner`` exposes the compiled fast path used for long runs.
"""

__version__ = "0.1.0"
