# SPDX-FileCopyrightText: 2024-present Oori Data <info@oori.dev>
#
# SPDX-License-Identifier: Apache-2.0
# stqlearn

# ruff: noqa: F401,F403

'''
Distributed Q-learning for multi-agent LQR with consensus-based state tracking,
the full- & partial-observation baselines, & a Riccati ground-truth oracle
'''

from .__about__ import __version__
