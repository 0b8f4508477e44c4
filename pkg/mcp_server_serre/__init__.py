from .server import serve


def main():
    """MCP Serre - 다중타입 Barsotti–Tate 변형환과 Serre 가중치 계산 서비스"""
    import asyncio
    asyncio.run(serve())


if __name__ == "__main__":
    main()
