from typing import List

from fastmcp import FastMCP

# Import the calculator registration functions
from calculators.wiretap_channel import register_channel_tool
from calculators.wiretap_codelength import register_code_length_tool
from calculators.wiretap_exponents import register_balance_tool, register_exponents_tool
from calculators.wiretap_montecarlo import register_simulate_tool
from calculators.wiretap_optimize import (
    register_capacity_tool,
    register_secrecy_capacity_tool,
    register_secrecy_rate_tool,
)
from calculators.wiretap_sweep import register_sweep_tool, register_threshold_tool

# Initialize FastMCP instance
mcp = FastMCP("ook-wiretap")

def register_all_tools() -> List:
    """Register all OOK wiretap calculation tools with the MCP server."""
    registered_tools = []

    # Channel model
    registered_tools.append(register_channel_tool(mcp))

    # Optimized rates
    registered_tools.append(register_capacity_tool(mcp))
    registered_tools.append(register_secrecy_rate_tool(mcp))
    registered_tools.append(register_secrecy_capacity_tool(mcp))

    # Attenuation scans
    registered_tools.append(register_threshold_tool(mcp))
    registered_tools.append(register_sweep_tool(mcp))

    # Finite-length analysis
    registered_tools.append(register_exponents_tool(mcp))
    registered_tools.append(register_balance_tool(mcp))
    registered_tools.append(register_code_length_tool(mcp))

    # Monte Carlo check
    registered_tools.append(register_simulate_tool(mcp))

    return registered_tools

# Register all tools
tools = register_all_tools()

if __name__ == "__main__":
    mcp.run()
