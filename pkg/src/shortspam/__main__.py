from shortspam.cli import main

main()
