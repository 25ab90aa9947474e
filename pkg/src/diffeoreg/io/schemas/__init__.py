"""Pandera schemas for every tabular artifact diffeoreg reads or writes."""
