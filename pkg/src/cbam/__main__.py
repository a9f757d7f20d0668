from cbam.cli import main

main()
