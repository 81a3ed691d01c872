# Tests for the projected cooling simulator
