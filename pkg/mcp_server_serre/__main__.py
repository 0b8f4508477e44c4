from mcp_server_serre import main
main()
