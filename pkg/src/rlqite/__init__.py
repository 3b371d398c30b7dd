"""Statevector simulation of ordering-steered imaginary-time evolution.

Core pieces: exact small-system quantum states (states), transverse-field
Ising and Sherrington-Kirkpatrick model builders (models), the Trotterized
unitary local approximation of imaginary-time evolution (qite), a term
reordering environment (env), a small dependency-free MLP with PPO training
(nets, ppo), and a command line front end (cli).
"""

__version__ = "0.1.0"
