"""Tests for certiplace"""
